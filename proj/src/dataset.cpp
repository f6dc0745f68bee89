#include "causeprobe/dataset.hpp"

#include <set>

#include "causeprobe/error.hpp"
#include "causeprobe/io.hpp"

namespace causeprobe {

using io::json;

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::PaperStated: return "paper-stated";
    case Provenance::DerivedFromCitedSource: return "derived-from-cited-source";
    case Provenance::UserSupplied: return "user-supplied";
  }
  return "?";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "paper-stated") return Provenance::PaperStated;
  if (s == "derived-from-cited-source") return Provenance::DerivedFromCitedSource;
  if (s == "user-supplied") return Provenance::UserSupplied;
  throw ValidationError("unknown provenance '" + std::string(s) + "'");
}

void BenchmarkDataset::validate() const {
  if (name.empty()) throw ValidationError("dataset name must be nonempty");
  if (truth.size() < 2) {
    throw ValidationError("dataset '" + name + "' needs at least two variables");
  }
  if (!allow_symmetric && truth.symmetric_count() > 0) {
    throw ValidationError("dataset '" + name +
                          "' has symmetric truth edges but allow_symmetric is not set");
  }
  truth.for_each_pair([&](std::size_t i, std::size_t j, EdgeState s) {
    const bool has_flag = provenance.count({i, j}) > 0;
    if (s != EdgeState::Absent && !has_flag) {
      throw ValidationError("dataset '" + name + "': edge " + truth.label(i) + " - " +
                            truth.label(j) + " has no provenance flag");
    }
    if (s == EdgeState::Absent && has_flag) {
      throw ValidationError("dataset '" + name + "': provenance for absent pair " +
                            truth.label(i) + " - " + truth.label(j));
    }
  });
}

namespace {

BenchmarkDataset dataset_from_json(const json& doc, const std::string& ctx) {
  io::reject_unknown_fields(doc, {"name", "source", "variables", "edges", "allow_symmetric"}, ctx);

  BenchmarkDataset ds;
  ds.name = io::require_string(doc, "name", ctx);
  if (doc.contains("source")) {
    if (!doc["source"].is_string()) throw ValidationError(ctx + ": source must be a string");
    ds.source = doc["source"].get<std::string>();
  }
  if (doc.contains("allow_symmetric")) {
    if (!doc["allow_symmetric"].is_boolean()) {
      throw ValidationError(ctx + ": allow_symmetric must be a boolean");
    }
    ds.allow_symmetric = doc["allow_symmetric"].get<bool>();
  }

  const json& vars = io::require(doc, "variables", ctx);
  if (!vars.is_array()) throw ValidationError(ctx + ": variables must be an array");
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (const auto& v : vars) {
    if (!v.is_string()) throw ValidationError(ctx + ": variable names must be strings");
    auto n = v.get<std::string>();
    if (n.empty()) throw ValidationError(ctx + ": empty variable name");
    if (!seen.insert(n).second) throw ValidationError(ctx + ": duplicate variable '" + n + "'");
    names.push_back(std::move(n));
  }
  ds.truth = CausalGraph(std::move(names));

  const json edges = doc.contains("edges") ? doc["edges"] : json::array();
  if (!edges.is_array()) throw ValidationError(ctx + ": edges must be an array");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const json& e = edges[k];
    const std::string ectx = ctx + ": edges[" + std::to_string(k) + "]";
    io::reject_unknown_fields(e, {"from", "to", "kind", "provenance"}, ectx);
    const auto from = io::require_string(e, "from", ectx);
    const auto to = io::require_string(e, "to", ectx);
    const auto kind = e.contains("kind") ? e["kind"].get<std::string>() : std::string("directed");
    const auto prov = io::require_string(e, "provenance", ectx);
    auto fi = ds.truth.find(from);
    auto ti = ds.truth.find(to);
    if (!fi || !ti) throw ValidationError(ectx + ": edge references an undeclared variable");
    if (*fi == *ti) throw ValidationError(ectx + ": self-edge on '" + from + "'");
    if (ds.truth.adjacent(*fi, *ti)) {
      throw ValidationError(ectx + ": pair " + from + " - " + to + " listed twice");
    }
    if (kind == "directed") {
      ds.truth.add_directed(*fi, *ti);
    } else if (kind == "symmetric") {
      ds.truth.add_symmetric(*fi, *ti);
    } else {
      throw ValidationError(ectx + ": kind must be 'directed' or 'symmetric'");
    }
    try {
      ds.provenance[{std::min(*fi, *ti), std::max(*fi, *ti)}] = provenance_from_string(prov);
    } catch (const ValidationError& err) {
      throw ValidationError(ectx + ": " + err.what());
    }
  }
  ds.validate();
  return ds;
}

}  // namespace

BenchmarkDataset parse_dataset(std::string_view text, const std::string& source_name) {
  const json doc = io::parse_json(text, source_name);
  const std::string ctx = "dataset " + source_name;
  try {
    return dataset_from_json(doc, ctx);
  } catch (const json::exception& e) {
    throw ValidationError(ctx + ": " + e.what());
  }
}

BenchmarkDataset load_dataset(const std::filesystem::path& path) {
  return parse_dataset(io::read_file(path), path.string());
}

std::string serialize_dataset(const BenchmarkDataset& dataset) {
  json doc = json::object();
  doc["name"] = dataset.name;
  doc["source"] = dataset.source;
  doc["variables"] = dataset.variables();
  if (dataset.allow_symmetric) doc["allow_symmetric"] = true;
  json edges = json::array();
  dataset.truth.for_each_pair([&](std::size_t i, std::size_t j, EdgeState s) {
    if (s == EdgeState::Absent) return;
    json e = json::object();
    const bool backward = s == EdgeState::Backward;
    e["from"] = dataset.truth.label(backward ? j : i);
    e["to"] = dataset.truth.label(backward ? i : j);
    e["kind"] = s == EdgeState::Symmetric ? "symmetric" : "directed";
    e["provenance"] = std::string(to_string(dataset.provenance.at({i, j})));
    edges.push_back(std::move(e));
  });
  doc["edges"] = std::move(edges);
  return io::dump_pretty(doc);
}

std::uint64_t expected_query_count(std::size_t variable_count, std::uint64_t template_count) {
  if (template_count == 0) throw InputError("template count must be at least 1");
  const std::uint64_t n = variable_count;
  const std::uint64_t pairs = n < 2 ? 0 : n * (n - 1) / 2;
  return 2 * pairs * template_count;
}

std::uint64_t expected_query_count(const BenchmarkDataset& dataset, std::uint64_t template_count) {
  return expected_query_count(dataset.size(), template_count);
}

}  // namespace causeprobe
