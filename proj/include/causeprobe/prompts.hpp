#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace causeprobe::prompts {

enum class Symmetry { Symmetric, Asymmetric };

struct QueryTemplate {
  int id = 0;
  std::string_view question;     // "Does {X} cause {Y}?"
  std::string_view declarative;  // "{X} causes {Y}."
  Symmetry symmetry = Symmetry::Symmetric;
};

// The five built-in templates, ids 1..5.
const std::vector<QueryTemplate>& templates();
// InputError for ids outside 1..5.
const QueryTemplate& query_template(int id);
std::vector<int> template_ids();

std::string capitalize_first(std::string_view text);

// Substitutes cause for {X} and effect for {Y}; InputError on empty names.
std::string instantiate_pair(const QueryTemplate& t, std::string_view cause,
                             std::string_view effect);

// Declarative statement with the verb agreeing with the subject
// ("Rain causes floods.", "Floods cause rain.").
std::string declarative_statement(const QueryTemplate& t, std::string_view cause,
                                  std::string_view effect);

// Heuristic: the head noun (last word, or the word before " of ") ends in
// "s" but not "ss", "us" or "is".
bool looks_plural(std::string_view noun_phrase);

// ---------------------------------------------------------------------------
// Causal chains over letter-named variables.

struct ChainSpec {
  std::size_t length = 3;  // 2..10
  // Positions in the chain (0 = first variable); defaults to (0, length-1).
  std::optional<std::pair<std::size_t, std::size_t>> question;
  // Shuffles the premise order.
  std::optional<std::uint64_t> order_seed;
  // Draws letters without replacement from chain_letter_pool().
  std::optional<std::uint64_t> names_seed;
};

struct ChainPrompt {
  std::string text;
  bool gold = false;
  std::vector<std::string> names;  // names[k] is chain position k
  // Premises as (cause position, effect position), in surface order.
  std::vector<std::pair<std::size_t, std::size_t>> premises;
  std::pair<std::size_t, std::size_t> question;
};

// Uppercase letters not used by the CoT exemplars (M, V, W, X, Y, Z excluded).
const std::vector<std::string>& chain_letter_pool();

// Throws InputError for lengths outside 2..10 or invalid question positions.
ChainPrompt chain_prompt(const ChainSpec& spec);

// "If A causes B, B causes C and C causes D. Does A cause D?"
std::string render_chain(const std::vector<std::pair<std::string, std::string>>& premises,
                         std::string_view from, std::string_view to);

// Reachability from `from` to `to` in the premise digraph.
bool chain_gold(const std::vector<std::pair<std::string, std::string>>& premises,
                std::string_view from, std::string_view to);

struct ChainItem {
  std::string id;
  std::string category;  // "N=<n>", "subchains" or "randomized"
  ChainSpec spec;
};

// 9 standard chains (n = 2..10), 4 subchain questions and 7 randomized
// variants (order or names); seeds derive from `seed`.
std::vector<ChainItem> default_chain_suite(std::uint64_t seed);

// JSON {"items": [{id, category?, length, question?: ["B","E"], order_seed?,
// names_seed?}]}; question letters name standard positions (A = first).
std::vector<ChainItem> load_chain_suite(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Natural word chains.

struct WordChainItem {
  std::string id;
  std::string category;  // e.g. real-world, imaginary, mixed
  std::vector<std::pair<std::string, std::string>> premises;
  std::pair<std::string, std::string> question;
};

std::string word_chain_prompt(const WordChainItem& item);
bool word_chain_gold(const WordChainItem& item);

// JSON {"items": [{id, category, premises: [[cause, effect], ...], question: [from, to]}]}
std::vector<WordChainItem> load_word_chains(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Chain-of-thought exemplars.

enum class CotTask { CausalChains, NaturalWordChains };

struct QaPair {
  std::string question;
  std::string answer;
};

const std::vector<QaPair>& cot_bank(CotTask task);
CotTask cot_task_from_string(std::string_view name);  // "causal-chains" | "natural-word-chains"
std::string_view to_string(CotTask task);

// First k pairs as "Q: ...\nA: ...\n" followed by "\n"; "" for k = 0.
// InputError when k exceeds the bank.
std::string cot_prefix(CotTask task, std::size_t k);

// The bank rendered as in data/cot/*.txt.
std::string render_cot_bank(CotTask task);

// ---------------------------------------------------------------------------
// Question banks.

enum class Grading { AutoYesNo, Manual };

struct BankItem {
  std::string id;
  std::string prompt;
  Grading grading = Grading::Manual;
  std::optional<bool> gold;  // required for AutoYesNo
  std::string category;
};

// JSON {"items": [...]}; an empty file is an empty bank. ValidationError on
// duplicate ids or auto items without gold.
std::vector<BankItem> load_question_bank(const std::filesystem::path& path);
std::vector<BankItem> parse_question_bank(std::string_view text, const std::string& source);

}  // namespace causeprobe::prompts
