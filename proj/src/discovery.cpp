#include "causeprobe/discovery.hpp"

#include <atomic>
#include <future>
#include <set>
#include <sstream>
#include <thread>

#include "causeprobe/error.hpp"
#include "causeprobe/io.hpp"
#include "causeprobe/prompts.hpp"

namespace causeprobe::discovery {

using verdicts::Answer;

std::string record_id(const std::string& dataset, int template_id, std::size_t i, std::size_t j) {
  return dataset + ":t" + std::to_string(template_id) + ":" + std::to_string(i) + ">" +
         std::to_string(j);
}

namespace {

[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const ThrottledError& e) {
    throw ThrottledError(context + ": " + e.what(), e.retry_after());
  } catch (const TransportError& e) {
    throw TransportError(context + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(context + ": " + e.what());
  } catch (const CorruptionError& e) {
    throw CorruptionError(context + ": " + e.what());
  }
}

}  // namespace

std::vector<EdgeVerdictTable> run_pairwise_probe(const BenchmarkDataset& dataset,
                                                 const std::vector<int>& templates,
                                                 gateway::Gateway& gw,
                                                 const ProbeOptions& options) {
  if (templates.empty()) throw InputError("no templates selected");
  std::set<int> seen;
  for (int t : templates) {
    prompts::query_template(t);
    if (!seen.insert(t).second) throw InputError("template " + std::to_string(t) + " listed twice");
  }
  const auto& vars = dataset.variables();
  const std::size_t n = vars.size();

  std::vector<EdgeVerdictTable> tables;
  struct Job {
    std::size_t table;
    std::size_t entry;
  };
  std::vector<Job> jobs;
  for (int t : templates) {
    EdgeVerdictTable table;
    table.dataset = dataset.name;
    table.template_id = t;
    table.variables = vars;
    table.provider = gw.config().name;
    table.model = gw.config().model;
    table.timestamp = options.timestamp;
    const auto& tpl = prompts::query_template(t);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        verdicts::VerdictRecord r;
        r.id = record_id(dataset.name, t, i, j);
        r.dataset = dataset.name;
        r.template_id = t;
        r.cause = vars[i];
        r.effect = vars[j];
        r.prompt = prompts::instantiate_pair(tpl, vars[i], vars[j]);
        jobs.push_back({tables.size(), table.entries.size()});
        table.entries.push_back(std::move(r));
      }
    }
    tables.push_back(std::move(table));
  }

  auto run = [&](const Job& job) {
    auto& r = tables[job.table].entries[job.entry];
    try {
      r.verdict = verdicts::classify(gw.complete(r.prompt), options.classifier);
    } catch (const Error&) {
      rethrow_with_context(dataset.name + ", template " + std::to_string(r.template_id) + ", (" +
                           r.cause + ", " + r.effect + ")");
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, jobs.size()));
  if (workers == 1) {
    for (const auto& job : jobs) run(job);
    return tables;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::vector<std::future<void>> futures;
  for (std::size_t w = 0; w < workers; ++w) {
    futures.push_back(std::async(std::launch::async, [&] {
      for (std::size_t k; !failed && (k = next++) < jobs.size();) {
        try {
          run(jobs[k]);
        } catch (...) {
          failed = true;
          throw;
        }
      }
    }));
  }
  std::exception_ptr first;
  for (auto& f : futures) {
    try {
      f.get();
    } catch (...) {
      if (!first) first = std::current_exception();
    }
  }
  if (first) std::rethrow_exception(first);
  return tables;
}

std::string_view to_string(MetaPolicy p) {
  return p == MetaPolicy::AsNo ? "as-no" : "exclude-pair";
}

MetaPolicy meta_policy_from_string(std::string_view s) {
  if (s == "as-no") return MetaPolicy::AsNo;
  if (s == "exclude-pair") return MetaPolicy::ExcludePair;
  throw InputError("unknown meta policy '" + std::string(s) + "' (expected as-no or exclude-pair)");
}

EdgeState merge_pair(Answer forward, Answer backward) {
  const bool f = forward == Answer::Yes;
  const bool b = backward == Answer::Yes;
  if (f && b) return EdgeState::Symmetric;
  if (f) return EdgeState::Forward;
  if (b) return EdgeState::Backward;
  return EdgeState::Absent;
}

AssembledGraph assemble_graph(const EdgeVerdictTable& table, MetaPolicy policy) {
  AssembledGraph out{CausalGraph(table.variables), {}, {}, false};
  const CausalGraph& g = out.graph;
  const std::size_t n = g.size();
  std::vector<std::optional<Answer>> answers(n * n);
  for (const auto& r : table.entries) {
    const auto i = g.find(r.cause);
    const auto j = g.find(r.effect);
    if (!i || !j) {
      throw InputError("table " + table.dataset + "/t" + std::to_string(table.template_id) +
                       ": entry '" + r.id + "' names an unknown variable");
    }
    if (*i == *j) throw InputError("table entry '" + r.id + "' is a self-pair");
    auto& slot = answers[*i * n + *j];
    if (slot) throw InputError("table entry (" + r.cause + ", " + r.effect + ") appears twice");
    slot = r.verdict.value;
  }
  const bool symmetric_wording =
      table.template_id >= 1 && table.template_id <= 5 &&
      prompts::query_template(table.template_id).symmetry == prompts::Symmetry::Symmetric;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& f = answers[i * n + j];
      const auto& b = answers[j * n + i];
      if (!f || !b) {
        throw InputError("table " + table.dataset + "/t" + std::to_string(table.template_id) +
                         " is incomplete: missing (" + g.label(f ? j : i) + ", " +
                         g.label(f ? i : j) + ")");
      }
      const EdgeState s = merge_pair(*f, *b);
      out.graph.set_state(i, j, s);
      if (*f == Answer::Meta && *b == Answer::Meta) out.both_meta.emplace_back(i, j);
      if (symmetric_wording && (s == EdgeState::Forward || s == EdgeState::Backward)) {
        out.wording_inconsistent.emplace_back(i, j);
      }
    }
  }
  out.excluded = policy == MetaPolicy::ExcludePair && !out.both_meta.empty();
  return out;
}

BenchmarkDataset rename_variables(const BenchmarkDataset& dataset,
                                  const std::map<std::string, std::string>& mapping) {
  const auto& vars = dataset.variables();
  for (const auto& [from, to] : mapping) {
    if (!dataset.truth.find(from)) {
      throw InputError("rename: '" + from + "' is not a variable of " + dataset.name);
    }
    if (io::trim(to).empty()) throw InputError("rename: empty new name for '" + from + "'");
  }
  std::vector<std::string> labels;
  std::set<std::string> used;
  for (const auto& v : vars) {
    auto it = mapping.find(v);
    const std::string name = it == mapping.end() ? v : it->second;
    if (!used.insert(name).second) {
      throw InputError("rename: two variables would both be called '" + name + "'");
    }
    labels.push_back(name);
  }
  BenchmarkDataset out = dataset;
  out.truth = dataset.truth.relabeled(labels);
  return out;
}

namespace {

constexpr std::string_view kColumns = "id\tcause\teffect\tprompt\tverdict\tsource\trule\tresponse";

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(io::unescape_field(
        line.substr(start, tab == std::string::npos ? std::string::npos : tab - start)));
    if (tab == std::string::npos) return out;
    start = tab + 1;
  }
}

}  // namespace

std::string serialize_table(const EdgeVerdictTable& t) {
  std::ostringstream out;
  out << "# dataset\t" << io::escape_field(t.dataset) << '\n'
      << "# template\t" << t.template_id << '\n'
      << "# provider\t" << io::escape_field(t.provider) << '\n'
      << "# model\t" << io::escape_field(t.model) << '\n'
      << "# timestamp\t" << io::escape_field(t.timestamp) << '\n'
      << "# variables";
  for (const auto& v : t.variables) out << '\t' << io::escape_field(v);
  out << '\n' << kColumns << '\n';
  for (const auto& r : t.entries) {
    out << io::escape_field(r.id) << '\t' << io::escape_field(r.cause) << '\t'
        << io::escape_field(r.effect) << '\t' << io::escape_field(r.prompt) << '\t'
        << verdicts::to_string(r.verdict.value) << '\t' << verdicts::to_string(r.verdict.source)
        << '\t' << io::escape_field(r.verdict.rule) << '\t' << io::escape_field(r.verdict.raw)
        << '\n';
  }
  return out.str();
}

EdgeVerdictTable parse_table(std::string_view text, const std::string& source) {
  EdgeVerdictTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool have_template = false, have_columns = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto key_start = line.find_first_not_of("# ");
      if (key_start == std::string::npos) continue;
      auto fields = split_tabs(line.substr(key_start));
      const std::string key = fields[0];
      fields.erase(fields.begin());
      const std::string value = fields.empty() ? "" : fields[0];
      if (key == "dataset") {
        t.dataset = value;
      } else if (key == "template") {
        try {
          t.template_id = std::stoi(value);
        } catch (const std::exception&) {
          throw ValidationError(where + ": template id '" + value + "' is not a number");
        }
        have_template = true;
      } else if (key == "provider") {
        t.provider = value;
      } else if (key == "model") {
        t.model = value;
      } else if (key == "timestamp") {
        t.timestamp = value;
      } else if (key == "variables") {
        t.variables = fields;
      } else {
        throw ValidationError(where + ": unknown header '" + key + "'");
      }
      continue;
    }
    if (line == kColumns) {
      have_columns = true;
      continue;
    }
    const auto f = split_tabs(line);
    if (f.size() != 8) {
      throw ValidationError(where + ": expected 8 columns, found " + std::to_string(f.size()));
    }
    verdicts::VerdictRecord r;
    r.id = f[0];
    r.dataset = t.dataset;
    r.template_id = t.template_id;
    r.cause = f[1];
    r.effect = f[2];
    r.prompt = f[3];
    const auto value = verdicts::answer_from_string(f[4]);
    const auto src = verdicts::source_from_string(f[5]);
    if (!value) throw ValidationError(where + ": unknown verdict '" + f[4] + "'");
    if (!src) throw ValidationError(where + ": unknown source '" + f[5] + "'");
    if (*src == verdicts::Source::Manual && *value == Answer::Unclassified) {
      throw ValidationError(where + ": manual verdicts cannot be Unclassified");
    }
    r.verdict = {*value, *src, f[7], f[6]};
    t.entries.push_back(std::move(r));
  }
  if (!have_template || !have_columns || t.dataset.empty()) {
    throw ValidationError(source + ": missing dataset, template or column header");
  }
  return t;
}

}  // namespace causeprobe::discovery
