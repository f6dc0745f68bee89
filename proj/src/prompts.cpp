#include "causeprobe/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "causeprobe/error.hpp"
#include "causeprobe/io.hpp"
#include "causeprobe/rng.hpp"

namespace causeprobe::prompts {

using io::json;

const std::vector<QueryTemplate>& templates() {
  static const std::vector<QueryTemplate> kTemplates = {
      {1, "Are {X} and {Y} causally related?", "{X} and {Y} are causally related.",
       Symmetry::Symmetric},
      {2, "Is there a causal connection between {X} and {Y}?",
       "There is a causal connection between {X} and {Y}.", Symmetry::Symmetric},
      {3, "Is there a causality between {X} and {Y}?", "There is a causality between {X} and {Y}.",
       Symmetry::Symmetric},
      {4, "Does {X} cause {Y}?", "{X} causes {Y}.", Symmetry::Asymmetric},
      {5, "Does {X} influence {Y}?", "{X} influences {Y}.", Symmetry::Asymmetric},
  };
  return kTemplates;
}

const QueryTemplate& query_template(int id) {
  if (id < 1 || id > 5) throw InputError("unknown template id " + std::to_string(id));
  return templates()[static_cast<std::size_t>(id - 1)];
}

std::vector<int> template_ids() { return {1, 2, 3, 4, 5}; }

std::string capitalize_first(std::string_view text) {
  std::string out(text);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

namespace {

std::string substitute(std::string_view pattern, std::string_view x, std::string_view y) {
  std::string out;
  for (std::size_t k = 0; k < pattern.size();) {
    if (pattern.compare(k, 3, "{X}") == 0) {
      out += x;
      k += 3;
    } else if (pattern.compare(k, 3, "{Y}") == 0) {
      out += y;
      k += 3;
    } else {
      out += pattern[k++];
    }
  }
  return out;
}

void check_names(std::string_view cause, std::string_view effect) {
  if (cause.empty() || effect.empty()) throw InputError("variable names must be nonempty");
}

}  // namespace

std::string instantiate_pair(const QueryTemplate& t, std::string_view cause,
                             std::string_view effect) {
  check_names(cause, effect);
  return capitalize_first(substitute(t.question, cause, effect));
}

bool looks_plural(std::string_view phrase) {
  std::string_view head = phrase;
  if (auto of = head.find(" of "); of != std::string_view::npos) head = head.substr(0, of);
  while (!head.empty() && head.back() == ' ') head.remove_suffix(1);
  if (auto sp = head.rfind(' '); sp != std::string_view::npos) head = head.substr(sp + 1);
  if (head.size() < 2) return false;
  const std::string word = io::lowercase(head);
  if (word.back() != 's') return false;
  const std::string_view tail(word.data() + word.size() - 2, 2);
  return tail != "ss" && tail != "us" && tail != "is";
}

std::string declarative_statement(const QueryTemplate& t, std::string_view cause,
                                  std::string_view effect) {
  check_names(cause, effect);
  std::string pattern(t.declarative);
  if (looks_plural(cause)) {
    for (const auto& [singular, plural] :
         {std::pair<std::string_view, std::string_view>{"} causes {", "} cause {"},
          {"} influences {", "} influence {"}}) {
      if (auto at = pattern.find(singular); at != std::string::npos) {
        pattern.replace(at, singular.size(), plural);
      }
    }
  }
  return capitalize_first(substitute(pattern, cause, effect));
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& chain_letter_pool() {
  static const std::vector<std::string> kPool = [] {
    std::vector<std::string> out;
    for (char c = 'A'; c <= 'Z'; ++c) {
      if (std::string_view("MVWXYZ").find(c) == std::string_view::npos) out.emplace_back(1, c);
    }
    return out;
  }();
  return kPool;
}

std::string render_chain(const std::vector<std::pair<std::string, std::string>>& premises,
                         std::string_view from, std::string_view to) {
  if (premises.empty()) throw InputError("a chain needs at least one premise");
  std::string text = "If ";
  for (std::size_t k = 0; k < premises.size(); ++k) {
    if (k > 0) text += k + 1 == premises.size() ? " and " : ", ";
    text += premises[k].first + " causes " + premises[k].second;
  }
  text += ". Does " + std::string(from) + " cause " + std::string(to) + "?";
  return text;
}

bool chain_gold(const std::vector<std::pair<std::string, std::string>>& premises,
                std::string_view from, std::string_view to) {
  if (from == to) throw InputError("chain question asks about a variable causing itself");
  std::set<std::string> seen{std::string(from)};
  std::vector<std::string> frontier{std::string(from)};
  while (!frontier.empty()) {
    const std::string v = frontier.back();
    frontier.pop_back();
    for (const auto& [c, e] : premises) {
      if (c == v && seen.insert(e).second) {
        if (e == to) return true;
        frontier.push_back(e);
      }
    }
  }
  return false;
}

ChainPrompt chain_prompt(const ChainSpec& spec) {
  const std::size_t n = spec.length;
  if (n < 2 || n > 10) throw InputError("chain length must be in 2..10, got " + std::to_string(n));
  ChainPrompt out;
  out.question = spec.question.value_or(std::make_pair(std::size_t{0}, n - 1));
  const auto [from, to] = out.question;
  if (from >= n || to >= n) throw InputError("chain question position outside the chain");
  if (from == to) throw InputError("chain question asks about a variable causing itself");

  if (spec.names_seed) {
    auto pool = chain_letter_pool();
    SeededRng rng(*spec.names_seed);
    rng.shuffle(pool);
    out.names.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
  } else {
    for (std::size_t k = 0; k < n; ++k) out.names.emplace_back(1, static_cast<char>('A' + k));
  }
  for (std::size_t k = 0; k + 1 < n; ++k) out.premises.emplace_back(k, k + 1);
  if (spec.order_seed) {
    SeededRng rng(*spec.order_seed);
    rng.shuffle(out.premises);
  }
  std::vector<std::pair<std::string, std::string>> named;
  for (const auto& [c, e] : out.premises) named.emplace_back(out.names[c], out.names[e]);
  out.text = render_chain(named, out.names[from], out.names[to]);
  out.gold = chain_gold(named, out.names[from], out.names[to]);
  return out;
}

std::vector<ChainItem> default_chain_suite(std::uint64_t seed) {
  using Q = std::pair<std::size_t, std::size_t>;
  std::vector<ChainItem> items;
  for (std::size_t n = 2; n <= 10; ++n) {
    items.push_back({"chain-n" + std::to_string(n), "N=" + std::to_string(n), {n, {}, {}, {}}});
  }
  const std::pair<std::size_t, Q> subchains[] = {{6, {1, 4}}, {7, {2, 6}}, {8, {0, 3}}, {6, {4, 1}}};
  for (const auto& [n, q] : subchains) {
    const std::string id = "subchain-n" + std::to_string(n) + "-" +
                           std::string(1, static_cast<char>('A' + q.first)) +
                           std::string(1, static_cast<char>('A' + q.second));
    items.push_back({id, "subchains", {n, q, {}, {}}});
  }
  SeededRng rng(seed);
  const std::pair<std::size_t, Q> reordered[] = {{4, {0, 3}}, {5, {3, 1}}, {6, {5, 2}}};
  for (const auto& [n, q] : reordered) {
    items.push_back({"order-n" + std::to_string(n), "randomized", {n, q, rng.next(), {}}});
  }
  const std::pair<std::size_t, Q> renamed[] = {{3, {0, 2}}, {5, {4, 0}}, {7, {2, 5}}, {8, {6, 1}}};
  for (const auto& [n, q] : renamed) {
    items.push_back({"names-n" + std::to_string(n), "randomized", {n, q, {}, rng.next()}});
  }
  return items;
}

namespace {

std::size_t letter_position(const json& v, const std::string& ctx) {
  if (!v.is_string() || v.get<std::string>().size() != 1) {
    throw ValidationError(ctx + ": question entries are single letters");
  }
  const char c = v.get<std::string>()[0];
  if (c < 'A' || c > 'J') throw ValidationError(ctx + ": question letter outside A..J");
  return static_cast<std::size_t>(c - 'A');
}

const json& items_array(const json& doc, const std::string& ctx) {
  if (!doc.is_object()) throw ValidationError(ctx + ": top level must be an object");
  io::reject_unknown_fields(doc, {"items", "description"}, ctx);
  const json& items = io::require(doc, "items", ctx);
  if (!items.is_array()) throw ValidationError(ctx + ": 'items' must be an array");
  return items;
}

void check_unique(std::set<std::string>& ids, const std::string& id, const std::string& ctx) {
  if (id.empty()) throw ValidationError(ctx + ": empty id");
  if (!ids.insert(id).second) throw ValidationError(ctx + ": duplicate id '" + id + "'");
}

}  // namespace

std::vector<ChainItem> load_chain_suite(const std::filesystem::path& path) {
  const std::string ctx = "chain suite " + path.string();
  const json doc = io::load_json(path);
  std::vector<ChainItem> out;
  std::set<std::string> ids;
  try {
    const json& items = items_array(doc, ctx);
    for (std::size_t k = 0; k < items.size(); ++k) {
      const std::string ictx = ctx + ": items[" + std::to_string(k) + "]";
      const json& it = items[k];
      io::reject_unknown_fields(it, {"id", "category", "length", "question", "order_seed", "names_seed"},
                                ictx);
      ChainItem item;
      item.id = io::require_string(it, "id", ictx);
      check_unique(ids, item.id, ictx);
      item.spec.length = io::require(it, "length", ictx).get<std::size_t>();
      if (it.contains("question")) {
        const json& q = it["question"];
        if (!q.is_array() || q.size() != 2) throw ValidationError(ictx + ": question is [from, to]");
        item.spec.question = {letter_position(q[0], ictx), letter_position(q[1], ictx)};
      }
      if (it.contains("order_seed")) item.spec.order_seed = it["order_seed"].get<std::uint64_t>();
      if (it.contains("names_seed")) item.spec.names_seed = it["names_seed"].get<std::uint64_t>();
      item.category = it.contains("category") ? it["category"].get<std::string>()
                                              : "N=" + std::to_string(item.spec.length);
      chain_prompt(item.spec);
      out.push_back(std::move(item));
    }
  } catch (const json::exception& e) {
    throw ValidationError(ctx + ": " + e.what());
  } catch (const InputError& e) {
    throw ValidationError(ctx + ": " + e.what());
  }
  return out;
}

std::string word_chain_prompt(const WordChainItem& item) {
  return render_chain(item.premises, item.question.first, item.question.second);
}

bool word_chain_gold(const WordChainItem& item) {
  return chain_gold(item.premises, item.question.first, item.question.second);
}

std::vector<WordChainItem> load_word_chains(const std::filesystem::path& path) {
  const std::string ctx = "word chains " + path.string();
  const json doc = io::load_json(path);
  std::vector<WordChainItem> out;
  std::set<std::string> ids;
  auto read_pair = [](const json& p, const std::string& c) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string()) {
      throw ValidationError(c + ": expected [cause, effect]");
    }
    auto a = p[0].get<std::string>();
    auto b = p[1].get<std::string>();
    if (a.empty() || b.empty()) throw ValidationError(c + ": empty variable name");
    return std::make_pair(a, b);
  };
  try {
    const json& items = items_array(doc, ctx);
    for (std::size_t k = 0; k < items.size(); ++k) {
      const std::string ictx = ctx + ": items[" + std::to_string(k) + "]";
      const json& it = items[k];
      io::reject_unknown_fields(it, {"id", "category", "premises", "question"}, ictx);
      WordChainItem item;
      item.id = io::require_string(it, "id", ictx);
      check_unique(ids, item.id, ictx);
      item.category = it.contains("category") ? it["category"].get<std::string>() : "";
      const json& premises = io::require(it, "premises", ictx);
      if (!premises.is_array() || premises.empty()) {
        throw ValidationError(ictx + ": premises must be a nonempty array");
      }
      for (const auto& p : premises) item.premises.push_back(read_pair(p, ictx));
      item.question = read_pair(io::require(it, "question", ictx), ictx);
      if (item.question.first == item.question.second) {
        throw ValidationError(ictx + ": question asks about a variable causing itself");
      }
      out.push_back(std::move(item));
    }
  } catch (const json::exception& e) {
    throw ValidationError(ctx + ": " + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------

const std::vector<QaPair>& cot_bank(CotTask task) {
  static const std::vector<QaPair> kChains = {
      {"If X causes Y and Y causes Z. Does X cause Z?",
       "Because X causes Y and Y causes Z, X causes Z. The answer is yes."},
      {"If Z causes Y and Y causes X. Does Z cause X?",
       "Because Z causes Y and Y causes X, Z causes X. The answer is yes."},
      {"If X causes Y and Y causes Z. Does Y cause X?",
       "Because Y does not cause X directly and Y causes Z which does not cause X, Y does not "
       "cause X. The answer is no."},
      {"If Y causes Z and X causes Y. Does X cause Z?",
       "Because X causes Y and Y causes Z, X causes Z. The answer is yes."},
      {"If Y causes Z, W causes X, X causes Y and V causes W. Does M cause Z?",
       "Because M does not appear in any of the clauses, the answer is no."},
      {"If Y causes Z, W causes X, X causes Y and V causes W. Does V cause Z?",
       "Because V causes W, W causes X, X causes Y and Y causes Z, the answer is yes."},
      {"If V causes W, W causes X, X causes Y and Y causes Z. Does X cause W?",
       "Because X only causes Y and Y only causes Z, there is no directed path from X to W. The "
       "answer is no."},
      {"If Y causes Z, W causes X and V causes W. Does V cause Z?",
       "V causes W and W causes X, but neither V, W nor X cause Z. The answer is no."},
  };
  static const std::vector<QaPair> kWords = {
      {"If flipping switches causes light bulbs to shine and shining light bulbs cause moths to "
       "appear. Does flipping switches causes moths to appear?",
       "Because flipping switches causes light bulbs to shine and shining light bulbs causes "
       "moths to appear, flipping switches causes moths to appear. The answer is yes."},
      {"If heavy rain causes the streets to flood and shining light bulbs cause moths to appear. "
       "Does heavy rain cause moths to appear?",
       "Because heavy rain causes the streets to flood, but is not connected to shining light "
       "bulbs which allow for moths to appear. The answer is no."},
      {"If Sibfan causes flooded streets and heavy rain causes Sibfan. Does heavy rain cause "
       "flooded streets?",
       "Because heavy rain causes Sibfan and Sibfan causes flooded streets. The answer is yes."},
      {"If Sibfan causes heavy rain and Sibfan causes light bulbs to shine. Does Sibfan cause "
       "heavy rain?",
       "Because Sibfan directly causes heavy rain, the answer is yes."},
  };
  return task == CotTask::CausalChains ? kChains : kWords;
}

CotTask cot_task_from_string(std::string_view name) {
  if (name == "causal-chains") return CotTask::CausalChains;
  if (name == "natural-word-chains") return CotTask::NaturalWordChains;
  throw InputError("unknown CoT bank '" + std::string(name) + "'");
}

std::string_view to_string(CotTask task) {
  return task == CotTask::CausalChains ? "causal-chains" : "natural-word-chains";
}

std::string cot_prefix(CotTask task, std::size_t k) {
  const auto& bank = cot_bank(task);
  if (k > bank.size()) {
    throw InputError("CoT length " + std::to_string(k) + " exceeds the " +
                     std::string(to_string(task)) + " bank (" + std::to_string(bank.size()) +
                     " pairs)");
  }
  if (k == 0) return "";
  std::string out;
  for (std::size_t i = 0; i < k; ++i) {
    out += "Q: " + bank[i].question + "\nA: " + bank[i].answer + "\n";
  }
  return out + "\n";
}

std::string render_cot_bank(CotTask task) {
  std::string out;
  for (const auto& qa : cot_bank(task)) out += "Q: " + qa.question + "\nA: " + qa.answer + "\n";
  return out;
}

// ---------------------------------------------------------------------------

std::vector<BankItem> parse_question_bank(std::string_view text, const std::string& source) {
  if (io::trim(text).empty()) return {};
  const std::string ctx = "question bank " + source;
  const json doc = io::parse_json(text, source);
  std::vector<BankItem> out;
  std::set<std::string> ids;
  try {
    const json& items = items_array(doc, ctx);
    for (std::size_t k = 0; k < items.size(); ++k) {
      const std::string ictx = ctx + ": items[" + std::to_string(k) + "]";
      const json& it = items[k];
      io::reject_unknown_fields(it, {"id", "prompt", "grading", "gold", "category"}, ictx);
      BankItem item;
      item.id = io::require_string(it, "id", ictx);
      check_unique(ids, item.id, ictx);
      item.prompt = io::require_string(it, "prompt", ictx);
      if (item.prompt.empty()) throw ValidationError(ictx + ": empty prompt");
      const std::string grading = it.contains("grading") ? it["grading"].get<std::string>() : "manual";
      if (grading == "auto-yes-no") {
        item.grading = Grading::AutoYesNo;
      } else if (grading != "manual") {
        throw ValidationError(ictx + ": grading must be 'auto-yes-no' or 'manual'");
      }
      if (it.contains("gold")) {
        const json& g = it["gold"];
        if (g.is_boolean()) {
          item.gold = g.get<bool>();
        } else if (g.is_string() && (g == "yes" || g == "no")) {
          item.gold = g == "yes";
        } else {
          throw ValidationError(ictx + ": gold must be \"yes\", \"no\" or a boolean");
        }
      }
      if (item.grading == Grading::AutoYesNo && !item.gold) {
        throw ValidationError(ictx + ": auto-yes-no items need a gold answer");
      }
      if (it.contains("category")) item.category = it["category"].get<std::string>();
      out.push_back(std::move(item));
    }
  } catch (const json::exception& e) {
    throw ValidationError(ctx + ": " + e.what());
  }
  return out;
}

std::vector<BankItem> load_question_bank(const std::filesystem::path& path) {
  return parse_question_bank(io::read_file(path), path.string());
}

}  // namespace causeprobe::prompts
