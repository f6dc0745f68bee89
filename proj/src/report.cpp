#include "causeprobe/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "causeprobe/error.hpp"

namespace causeprobe::report {

namespace {

constexpr std::string_view kColumns =
    "dataset\tmethod\tprovider\tmodel\ttemplate\texcluded\tshd\tsid_mean\tsid_min\tsid_max\t"
    "precision\trecall\tf1\tsparsity\tdecisiveness";

const std::vector<std::string> kCanonicalOrder = {"altitude", "health",   "driving",
                                                   "recovery", "cancer", "earthquake"};

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s, const std::string& where) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ValidationError(where + ": '" + s + "' is not a number");
  }
  return v;
}

std::size_t parse_count(const std::string& s, const std::string& where) {
  std::size_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ValidationError(where + ": '" + s + "' is not a count");
  }
  return v;
}

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

std::string two_decimals(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

}  // namespace

MetricRow score_graph(const CausalGraph& pred, const BenchmarkDataset& dataset, std::string method,
                      std::string provider, std::string model, int template_id, bool excluded) {
  MetricRow r;
  r.dataset = dataset.name;
  r.method = std::move(method);
  r.provider = std::move(provider);
  r.model = std::move(model);
  r.template_id = template_id;
  r.excluded = excluded;
  const auto& truth = dataset.truth;
  r.shd = metrics::shd(pred, truth);
  if (truth.is_dag()) {
    const auto s = metrics::sid(pred, truth);
    r.sid_mean = s.mean;
    r.sid_min = s.min;
    r.sid_max = s.max;
  } else {
    r.sid_mean = std::numeric_limits<double>::quiet_NaN();
  }
  const auto f = metrics::f1(pred, truth);
  r.precision = f.precision;
  r.recall = f.recall;
  r.f1 = f.f1;
  r.sparsity = metrics::sparsity(truth.size(), metrics::aligned(pred, truth));
  r.decisiveness = metrics::decisiveness(pred);
  return r;
}

std::string serialize_rows(const std::vector<MetricRow>& rows, const std::string& manifest_digest) {
  std::ostringstream out;
  out << "# manifest\t" << manifest_digest << '\n' << kColumns << '\n';
  for (const auto& r : rows) {
    out << io::escape_field(r.dataset) << '\t' << io::escape_field(r.method) << '\t'
        << io::escape_field(r.provider) << '\t' << io::escape_field(r.model) << '\t'
        << r.template_id << '\t' << (r.excluded ? "yes" : "no") << '\t' << r.shd << '\t'
        << fmt(r.sid_mean) << '\t' << r.sid_min << '\t' << r.sid_max << '\t' << fmt(r.precision)
        << '\t' << fmt(r.recall) << '\t' << fmt(r.f1) << '\t' << fmt(r.sparsity) << '\t'
        << fmt(r.decisiveness) << '\n';
  }
  return out.str();
}

RowFile parse_rows(std::string_view text, const std::string& source) {
  RowFile file;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool have_columns = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    if (line.empty()) continue;
    if (line.rfind("# manifest\t", 0) == 0) {
      file.manifest_digest = line.substr(11);
      continue;
    }
    if (line == kColumns) {
      have_columns = true;
      continue;
    }
    if (!have_columns) throw ValidationError(where + ": expected the column header");
    const auto f = split_tabs(line);
    if (f.size() != 15) {
      throw ValidationError(where + ": expected 15 columns, found " + std::to_string(f.size()));
    }
    MetricRow r;
    r.dataset = f[0];
    r.method = f[1];
    r.provider = f[2];
    r.model = f[3];
    r.template_id = static_cast<int>(parse_count(f[4], where));
    if (f[5] != "yes" && f[5] != "no") throw ValidationError(where + ": excluded must be yes or no");
    r.excluded = f[5] == "yes";
    r.shd = parse_count(f[6], where);
    r.sid_mean = parse_double(f[7], where);
    r.sid_min = parse_count(f[8], where);
    r.sid_max = parse_count(f[9], where);
    r.precision = parse_double(f[10], where);
    r.recall = parse_double(f[11], where);
    r.f1 = parse_double(f[12], where);
    r.sparsity = parse_double(f[13], where);
    r.decisiveness = parse_double(f[14], where);
    file.rows.push_back(std::move(r));
  }
  if (!have_columns) throw ValidationError(source + ": not a metric row file");
  return file;
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Sid: return "SID";
    case Metric::Shd: return "SHD";
    case Metric::F1: return "F1";
    case Metric::Sparsity: return "Sparsity";
    case Metric::Ads: return "ADS";
  }
  return "?";
}

const Cell& MetricTable::at(Metric m, const std::string& method, const std::string& dataset) const {
  static const Cell kEmpty;
  auto it = cells.find({m, method, dataset});
  return it == cells.end() ? kEmpty : it->second;
}

MetricTable aggregate(const std::vector<RowFile>& runs) {
  if (runs.empty()) throw InputError("no runs to aggregate");
  MetricTable t;
  std::vector<std::string> seen_datasets;
  // (method, dataset) -> template -> row
  std::map<std::pair<std::string, std::string>, std::map<int, const MetricRow*>> groups;
  std::optional<std::set<std::string>> first_set;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    std::set<std::string> names;
    for (const auto& r : runs[k].rows) names.insert(r.dataset);
    if (names.empty()) throw InputError("run " + std::to_string(k + 1) + " has no metric rows");
    if (first_set && names != *first_set) {
      throw InputError("run " + std::to_string(k + 1) +
                       " covers different datasets than run 1; reports merge runs over one dataset set");
    }
    first_set = names;
  }
  for (const auto& run : runs) {
    t.manifests.push_back(run.manifest_digest);
    for (const auto& r : run.rows) {
      if (std::find(seen_datasets.begin(), seen_datasets.end(), r.dataset) == seen_datasets.end()) {
        seen_datasets.push_back(r.dataset);
      }
      if (std::find(t.methods.begin(), t.methods.end(), r.method) == t.methods.end()) {
        t.methods.push_back(r.method);
      }
      auto& slot = groups[{r.method, r.dataset}][r.template_id];
      if (slot) {
        throw InputError("two runs both report " + r.method + " on " + r.dataset + " template " +
                         std::to_string(r.template_id));
      }
      slot = &r;
    }
  }
  for (const auto& name : kCanonicalOrder) {
    if (std::find(seen_datasets.begin(), seen_datasets.end(), name) != seen_datasets.end()) {
      t.datasets.push_back(name);
    }
  }
  for (const auto& name : seen_datasets) {
    if (std::find(t.datasets.begin(), t.datasets.end(), name) == t.datasets.end()) {
      t.datasets.push_back(name);
    }
  }

  for (const auto& [key, by_template] : groups) {
    const auto& [method, dataset] = key;
    std::vector<double> sid, shd, f1, sparsity, sym, asym;
    bool sid_defined = true;
    for (const auto& [tid, row] : by_template) {
      if (row->excluded) continue;
      if (std::isnan(row->sid_mean)) sid_defined = false;
      sid.push_back(row->sid_mean);
      shd.push_back(static_cast<double>(row->shd));
      f1.push_back(row->f1);
      sparsity.push_back(row->sparsity);
      (tid <= 3 ? sym : asym).push_back(row->decisiveness);
    }
    auto put = [&](Metric m, const std::vector<double>& v) {
      if (!v.empty()) t.cells[{m, method, dataset}].value = metrics::summarize(v);
    };
    if (sid_defined) put(Metric::Sid, sid);
    put(Metric::Shd, shd);
    put(Metric::F1, f1);
    put(Metric::Sparsity, sparsity);
    if (!sym.empty() && !asym.empty()) {
      t.cells[{Metric::Ads, method, dataset}].value =
          metrics::Summary{metrics::ads_from_groups(sym, asym), 0.0, sym.size() + asym.size()};
    }
  }
  return t;
}

std::string render_table(const MetricTable& table) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"Metric", "Method"};
  header.insert(header.end(), table.datasets.begin(), table.datasets.end());
  rows.push_back(header);
  for (Metric m : {Metric::Sid, Metric::Shd, Metric::F1, Metric::Sparsity, Metric::Ads}) {
    for (const auto& method : table.methods) {
      std::vector<std::string> row{std::string(to_string(m)), method};
      for (const auto& d : table.datasets) {
        const auto& cell = table.at(m, method, d);
        if (!cell.value) {
          row.push_back("-");
        } else if (m == Metric::Ads) {
          row.push_back(two_decimals(cell.value->mean));
        } else {
          row.push_back(two_decimals(cell.value->mean) + " ± " + two_decimals(cell.value->stddev));
        }
      }
      rows.push_back(std::move(row));
    }
  }
  // Width in code points; cells are ASCII apart from the "±".
  auto width = [](const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
  };
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) widths[k] = std::max(widths[k], width(row[k]));
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k > 0) line += "  ";
      line += row[k];
      if (k + 1 < row.size()) line.append(widths[k] - width(row[k]), ' ');
    }
    out << line << '\n';
  }
  return out.str();
}

io::json table_to_json(const MetricTable& table) {
  io::json cells = io::json::array();
  for (Metric m : {Metric::Sid, Metric::Shd, Metric::F1, Metric::Sparsity, Metric::Ads}) {
    for (const auto& method : table.methods) {
      for (const auto& d : table.datasets) {
        const auto& cell = table.at(m, method, d);
        io::json c{{"metric", to_string(m)}, {"method", method}, {"dataset", d}};
        if (cell.value) {
          c["mean"] = cell.value->mean;
          c["std"] = cell.value->stddev;
          c["count"] = cell.value->count;
        } else {
          c["mean"] = nullptr;
        }
        cells.push_back(std::move(c));
      }
    }
  }
  return {{"manifests", table.manifests},
          {"datasets", table.datasets},
          {"methods", table.methods},
          {"cells", cells}};
}

io::json graph_to_json(const CausalGraph& g) {
  io::json edges = io::json::array();
  g.for_each_pair([&](std::size_t i, std::size_t j, EdgeState s) {
    switch (s) {
      case EdgeState::Absent: break;
      case EdgeState::Forward: edges.push_back({{"from", g.label(i)}, {"to", g.label(j)}, {"kind", "directed"}}); break;
      case EdgeState::Backward: edges.push_back({{"from", g.label(j)}, {"to", g.label(i)}, {"kind", "directed"}}); break;
      case EdgeState::Symmetric: edges.push_back({{"from", g.label(i)}, {"to", g.label(j)}, {"kind", "symmetric"}}); break;
    }
  });
  return {{"nodes", g.nodes()}, {"edges", edges}};
}

CausalGraph graph_from_json(const io::json& j, const std::string& source) {
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges")) {
    throw ValidationError(source + ": a graph needs nodes and edges");
  }
  try {
    CausalGraph g(j["nodes"].get<std::vector<std::string>>());
    for (const auto& e : j["edges"]) {
      const auto from = e.at("from").get<std::string>();
      const auto to = e.at("to").get<std::string>();
      const auto kind = e.at("kind").get<std::string>();
      if (kind == "directed") {
        g.add_directed(from, to);
      } else if (kind == "symmetric") {
        g.add_symmetric(from, to);
      } else {
        throw ValidationError(source + ": unknown edge kind '" + kind + "'");
      }
    }
    return g;
  } catch (const io::json::exception& e) {
    throw ValidationError(source + ": " + e.what());
  } catch (const InputError& e) {
    throw ValidationError(source + ": " + e.what());
  }
}

}  // namespace causeprobe::report
