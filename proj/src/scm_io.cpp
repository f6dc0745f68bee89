#include <charconv>
#include <set>

#include "causeprobe/error.hpp"
#include "causeprobe/io.hpp"
#include "causeprobe/scm.hpp"

namespace causeprobe::scm {

namespace {

using io::json;

constexpr Value kMaxRange = Value{1} << 20;

Value as_value(const json& v, const std::string& ctx) {
  if (!v.is_number_integer()) throw ValidationError(ctx + ": expected an integer");
  return v.get<Value>();
}

std::vector<Value> read_domain(const json& obj, const std::string& ctx) {
  const bool has_values = obj.contains("values");
  const bool has_range = obj.contains("range");
  if (has_values == has_range) {
    throw ValidationError(ctx + ": give exactly one of 'values' or 'range'");
  }
  std::vector<Value> out;
  if (has_values) {
    const json& vals = obj["values"];
    if (!vals.is_array()) throw ValidationError(ctx + ": 'values' must be an array");
    for (const auto& v : vals) out.push_back(as_value(v, ctx + ".values"));
    return out;
  }
  const json& r = obj["range"];
  if (!r.is_array() || r.size() != 2) throw ValidationError(ctx + ": 'range' must be [lo, hi]");
  const Value lo = as_value(r[0], ctx + ".range");
  const Value hi = as_value(r[1], ctx + ".range");
  if (hi < lo || hi - lo >= kMaxRange) throw ValidationError(ctx + ": bad or oversized range");
  for (Value v = lo; v <= hi; ++v) out.push_back(v);
  return out;
}

// Accepts a number or a "p/q" string.
double read_probability(const json& v, const std::string& ctx) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) throw ValidationError(ctx + ": probability must be a number or \"p/q\"");
  const auto s = v.get<std::string>();
  const auto slash = s.find('/');
  if (slash == std::string::npos) throw ValidationError(ctx + ": malformed fraction '" + s + "'");
  long long p = 0, q = 0;
  const auto r1 = std::from_chars(s.data(), s.data() + slash, p);
  const auto r2 = std::from_chars(s.data() + slash + 1, s.data() + s.size(), q);
  if (r1.ec != std::errc() || r1.ptr != s.data() + slash || r2.ec != std::errc() ||
      r2.ptr != s.data() + s.size() || q <= 0 || p < 0) {
    throw ValidationError(ctx + ": malformed fraction '" + s + "'");
  }
  return static_cast<double>(p) / static_cast<double>(q);
}

Mechanism read_mechanism(const json& m, std::size_t arity, const std::string& ctx) {
  if (!m.is_object()) throw ValidationError(ctx + ": mechanism must be an object");
  const auto kind = io::require_string(m, "kind", ctx);
  if (kind == "constant") {
    io::reject_unknown_fields(m, {"kind", "value"}, ctx);
    return ConstantMechanism{as_value(io::require(m, "value", ctx), ctx + ".value")};
  }
  if (kind == "table") {
    io::reject_unknown_fields(m, {"kind", "rows"}, ctx);
    const json& rows = io::require(m, "rows", ctx);
    if (!rows.is_array()) throw ValidationError(ctx + ": 'rows' must be an array");
    TableMechanism t;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const std::string rctx = ctx + ".rows[" + std::to_string(k) + "]";
      io::reject_unknown_fields(rows[k], {"in", "out"}, rctx);
      const json& in = io::require(rows[k], "in", rctx);
      if (!in.is_array() || in.size() != arity) {
        throw ValidationError(rctx + ": 'in' must list one value per parent");
      }
      std::vector<Value> key;
      for (const auto& v : in) key.push_back(as_value(v, rctx + ".in"));
      if (!t.rows.emplace(key, as_value(io::require(rows[k], "out", rctx), rctx + ".out")).second) {
        throw ValidationError(rctx + ": duplicate row");
      }
    }
    return t;
  }
  if (kind == "affine") {
    io::reject_unknown_fields(m, {"kind", "intercept", "coefficients"}, ctx);
    AffineMechanism a;
    if (m.contains("intercept")) a.intercept = as_value(m["intercept"], ctx + ".intercept");
    const json& c = io::require(m, "coefficients", ctx);
    if (!c.is_array()) throw ValidationError(ctx + ": 'coefficients' must be an array");
    for (const auto& v : c) a.coefficients.push_back(as_value(v, ctx + ".coefficients"));
    return a;
  }
  if (kind == "min" || kind == "and") {
    io::reject_unknown_fields(m, {"kind"}, ctx);
    return MinMechanism{};
  }
  if (kind == "max" || kind == "or") {
    io::reject_unknown_fields(m, {"kind"}, ctx);
    return MaxMechanism{};
  }
  throw ValidationError(ctx + ": unknown mechanism kind '" + kind + "'");
}

std::vector<std::string> read_names(const json& arr, const std::string& ctx) {
  if (!arr.is_array()) throw ValidationError(ctx + ": expected an array of names");
  std::vector<std::string> out;
  for (const auto& v : arr) {
    if (!v.is_string()) throw ValidationError(ctx + ": names must be strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

StructuralCausalModel scm_from_json(const json& doc, const std::string& ctx) {
  if (!doc.is_object()) throw ValidationError(ctx + ": top level must be an object");
  io::reject_unknown_fields(doc, {"name", "description", "exogenous", "endogenous"}, ctx);
  std::string name;
  if (doc.contains("name")) name = io::require_string(doc, "name", ctx);

  std::vector<ExogenousVariable> exogenous;
  const json exo = doc.contains("exogenous") ? doc["exogenous"] : json::array();
  if (!exo.is_array()) throw ValidationError(ctx + ": 'exogenous' must be an array");
  for (std::size_t k = 0; k < exo.size(); ++k) {
    const std::string vctx = ctx + ": exogenous[" + std::to_string(k) + "]";
    io::reject_unknown_fields(exo[k], {"name", "values", "range", "probabilities"}, vctx);
    ExogenousVariable u;
    u.name = io::require_string(exo[k], "name", vctx);
    u.domain = read_domain(exo[k], vctx);
    const json& probs = io::require(exo[k], "probabilities", vctx);
    if (probs.is_string() && probs.get<std::string>() == "uniform") {
      u.probabilities.assign(u.domain.size(), 1.0 / static_cast<double>(u.domain.size()));
    } else if (probs.is_array()) {
      for (const auto& p : probs) u.probabilities.push_back(read_probability(p, vctx));
    } else {
      throw ValidationError(vctx + ": 'probabilities' must be an array or \"uniform\"");
    }
    exogenous.push_back(std::move(u));
  }

  std::vector<EndogenousVariable> endogenous;
  const json& endo = io::require(doc, "endogenous", ctx);
  if (!endo.is_array()) throw ValidationError(ctx + ": 'endogenous' must be an array");
  for (std::size_t k = 0; k < endo.size(); ++k) {
    const std::string vctx = ctx + ": endogenous[" + std::to_string(k) + "]";
    io::reject_unknown_fields(
        endo[k], {"name", "values", "range", "parents", "mechanism", "encodes_graph_over"}, vctx);
    EndogenousVariable v;
    v.name = io::require_string(endo[k], "name", vctx);
    v.domain = read_domain(endo[k], vctx);
    if (endo[k].contains("parents")) v.parents = read_names(endo[k]["parents"], vctx + ".parents");
    v.mechanism = read_mechanism(io::require(endo[k], "mechanism", vctx), v.parents.size(),
                                 vctx + ".mechanism");
    if (endo[k].contains("encodes_graph_over")) {
      v.encodes_graph_over = read_names(endo[k]["encodes_graph_over"], vctx + ".encodes_graph_over");
    }
    endogenous.push_back(std::move(v));
  }
  return StructuralCausalModel(std::move(exogenous), std::move(endogenous), std::move(name));
}

}  // namespace

StructuralCausalModel parse_scm(std::string_view text, const std::string& source_name) {
  const json doc = io::parse_json(text, source_name);
  const std::string ctx = "scm " + source_name;
  try {
    return scm_from_json(doc, ctx);
  } catch (const json::exception& e) {
    throw ValidationError(ctx + ": " + e.what());
  } catch (const StructuralError& e) {
    throw StructuralError(ctx + ": " + e.what());
  }
}

StructuralCausalModel load_scm(const std::filesystem::path& path) {
  return parse_scm(io::read_file(path), path.string());
}

}  // namespace causeprobe::scm
