#include "causeprobe/verdicts.hpp"

#include <cctype>
#include <map>
#include <sstream>

#include "causeprobe/error.hpp"
#include "causeprobe/io.hpp"

namespace causeprobe::verdicts {

namespace {

constexpr std::string_view kHeader = "id\tdataset\ttemplate\tcause\teffect\tprompt\tresponse\tlabel";

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool starts_with_word(std::string_view text, std::string_view word) {
  if (text.size() < word.size()) return false;
  for (std::size_t k = 0; k < word.size(); ++k) {
    if (std::tolower(static_cast<unsigned char>(text[k])) != word[k]) return false;
  }
  return text.size() == word.size() || !is_word_char(text[word.size()]);
}

std::size_t noise_prefix(std::string_view t) {
  static const std::vector<std::string_view> kMultiByte = {
      "“", "”", "‘", "’", "«", "»", "•", "–", "—"};
  const unsigned char c = static_cast<unsigned char>(t[0]);
  if (std::isspace(c) || c == '"' || c == '\'' || c == '`' || c == '-' || c == '*' || c == '+' ||
      c == '>') {
    return 1;
  }
  for (auto m : kMultiByte) {
    if (t.substr(0, m.size()) == m) return m.size();
  }
  // Numbered list markers: "1." or "2)".
  std::size_t k = 0;
  while (k < t.size() && std::isdigit(static_cast<unsigned char>(t[k]))) ++k;
  if (k > 0 && k < t.size() && (t[k] == '.' || t[k] == ')')) {
    if (k + 1 == t.size() || !std::isdigit(static_cast<unsigned char>(t[k + 1]))) return k + 1;
  }
  return 0;
}

}  // namespace

std::string_view to_string(Answer a) {
  switch (a) {
    case Answer::Yes: return "Yes";
    case Answer::No: return "No";
    case Answer::Meta: return "Meta";
    case Answer::Unclassified: return "Unclassified";
  }
  return "Unclassified";
}

std::string_view to_string(Source s) { return s == Source::Auto ? "auto" : "manual"; }

std::optional<Answer> answer_from_string(std::string_view text) {
  const std::string t = io::lowercase(io::trim(text));
  if (t == "yes") return Answer::Yes;
  if (t == "no") return Answer::No;
  if (t == "meta") return Answer::Meta;
  if (t == "unclassified") return Answer::Unclassified;
  return std::nullopt;
}

std::optional<Source> source_from_string(std::string_view text) {
  const std::string t = io::lowercase(io::trim(text));
  if (t == "auto") return Source::Auto;
  if (t == "manual") return Source::Manual;
  return std::nullopt;
}

const std::vector<std::string>& default_meta_phrases() {
  static const std::vector<std::string> kPhrases = {
      "insufficient information", "cannot be determined", "no statement can be made",
      "not enough information",   "not possible to determine", "impossible to determine",
      "cannot determine",         "can't determine",          "unable to determine"};
  return kPhrases;
}

std::string_view strip_leading_noise(std::string_view text) {
  while (!text.empty()) {
    const std::size_t n = noise_prefix(text);
    if (n == 0) break;
    text.remove_prefix(n);
  }
  return text;
}

Verdict classify(std::string_view text, const ClassifierConfig& cfg) {
  Verdict v;
  v.raw = std::string(text);
  const std::string_view body = strip_leading_noise(text);
  if (starts_with_word(body, "yes")) {
    v.value = Answer::Yes;
    v.rule = "prefix:yes";
    return v;
  }
  if (starts_with_word(body, "no")) {
    v.value = Answer::No;
    v.rule = "prefix:no";
    return v;
  }
  const std::string lower = io::lowercase(body);
  for (const auto& phrase : cfg.meta_phrases) {
    if (phrase.empty()) continue;
    if (lower.find(io::lowercase(phrase)) != std::string::npos) {
      v.value = Answer::Meta;
      v.rule = "meta:" + phrase;
      return v;
    }
  }
  return v;
}

std::size_t export_label_queue(const std::vector<VerdictRecord>& records,
                               const std::filesystem::path& path) {
  std::ostringstream out;
  std::size_t count = 0;
  for (const auto& r : records) {
    if (r.verdict.value != Answer::Unclassified) continue;
    if (count++ == 0) out << kHeader << '\n';
    out << io::escape_field(r.id) << '\t' << io::escape_field(r.dataset) << '\t'
        << r.template_id << '\t' << io::escape_field(r.cause) << '\t'
        << io::escape_field(r.effect) << '\t' << io::escape_field(r.prompt) << '\t'
        << io::escape_field(r.verdict.raw) << '\t' << '\n';
  }
  io::write_file(path, out.str());
  return count;
}

std::vector<LabelRow> read_label_file(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  std::vector<LabelRow> rows;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (io::trim(line).empty() || line[0] == '#' || line == kHeader) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 7 && fields.size() != 8) {
      throw ValidationError(where + ": expected 8 tab-separated columns, found " +
                            std::to_string(fields.size()));
    }
    LabelRow row;
    row.line = line_no;
    row.id = io::unescape_field(fields[0]);
    row.label = fields.size() == 8 ? io::trim(fields[7]) : "";
    rows.push_back(std::move(row));
  }
  return rows;
}

std::size_t import_labels(const std::filesystem::path& path, std::vector<VerdictRecord>& records) {
  const auto rows = read_label_file(path);
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < records.size(); ++k) index.emplace(records[k].id, k);

  // Validate everything first so a bad row leaves the table untouched.
  std::vector<std::pair<std::size_t, Answer>> updates;
  for (const auto& row : rows) {
    if (row.label.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(row.line);
    auto it = index.find(row.id);
    if (it == index.end()) throw ValidationError(where + ": unknown item id '" + row.id + "'");
    const auto answer = answer_from_string(row.label);
    if (!answer || *answer == Answer::Unclassified) {
      throw ValidationError(where + ": label '" + row.label + "' for '" + row.id +
                            "' is not one of yes, no, meta");
    }
    const Verdict& current = records[it->second].verdict;
    if (current.source == Source::Auto && current.value != Answer::Unclassified) {
      throw ValidationError(where + ": '" + row.id + "' was classified automatically as " +
                            std::string(to_string(current.value)) + " and is not in the queue");
    }
    updates.emplace_back(it->second, *answer);
  }
  std::size_t changed = 0;
  for (const auto& [k, answer] : updates) {
    Verdict& v = records[k].verdict;
    if (v.source == Source::Manual && v.value == answer) continue;
    v.value = answer;
    v.source = Source::Manual;
    v.rule = "manual";
    ++changed;
  }
  return changed;
}

std::string_view to_string(Grade g) {
  switch (g) {
    case Grade::Correct: return "correct";
    case Grade::Incorrect: return "incorrect";
    case Grade::Abstained: return "abstained";
    case Grade::Pending: return "pending";
  }
  return "pending";
}

Grade grade(const Verdict& v, bool gold, bool score_abstentions) {
  switch (v.value) {
    case Answer::Yes: return gold ? Grade::Correct : Grade::Incorrect;
    case Answer::No: return gold ? Grade::Incorrect : Grade::Correct;
    case Answer::Meta: return score_abstentions ? Grade::Abstained : Grade::Incorrect;
    case Answer::Unclassified: return Grade::Pending;
  }
  return Grade::Pending;
}

}  // namespace causeprobe::verdicts
