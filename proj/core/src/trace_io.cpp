#include "sscf/trace_io.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "sscf/error.hpp"

namespace sscf::mixing {

namespace {

using nlohmann::json;

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

bool has_b_columns(const MixingConfig& cfg) { return cfg.scheme != Scheme::Simple; }

}  // namespace

std::string config_to_json(const MixingConfig& cfg) {
  json d;
  d["form"] = cfg.damping.form == DampingForm::Constant ? "constant" : "power_cap";
  d["a"] = cfg.damping.a;
  d["exponent"] = cfg.damping.exponent;
  d["offset"] = cfg.damping.offset;
  d["scale"] = cfg.damping.scale;
  d["cap"] = cfg.damping.cap;
  json j;
  j["scheme"] = to_string(cfg.scheme);
  j["depth"] = cfg.depth;
  j["coefficients"] = cfg.coefficients;
  j["damping"] = d;
  j["anderson_regularization"] = cfg.anderson_regularization;
  j["n_vec"] = cfg.n_vec;
  j["ell"] = cfg.ell;
  j["max_iter"] = cfg.max_iter;
  j["seed"] = cfg.seed;
  j["warmup_steps"] = cfg.warmup_steps;
  j["block_size"] = cfg.block_size;
  j["tol"] = cfg.tol;
  return j.dump();
}

MixingConfig config_from_json(const std::string& text, const MixingConfig& base) {
  MixingConfig cfg = base;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidArgument, std::string("config: ") + e.what());
  }
  require(j.is_object(), ErrorKind::InvalidArgument, "config must be a JSON object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      const json& v = it.value();
      if (key == "scheme") {
        cfg.scheme = scheme_from_string(v.get<std::string>());
      } else if (key == "depth") {
        cfg.depth = v.get<Index>();
      } else if (key == "coefficients") {
        cfg.coefficients = v.get<std::vector<double>>();
      } else if (key == "damping") {
        require(v.is_object(), ErrorKind::InvalidArgument, "config: damping must be an object");
        for (auto d = v.begin(); d != v.end(); ++d) {
          const std::string& dk = d.key();
          if (dk == "form") {
            const auto form = d.value().get<std::string>();
            require(form == "power_cap" || form == "constant", ErrorKind::InvalidArgument,
                    "config: unknown damping form '" + form + "'");
            cfg.damping.form = form == "constant" ? DampingForm::Constant : DampingForm::PowerCap;
          } else if (dk == "a") {
            cfg.damping.a = d.value().get<double>();
          } else if (dk == "exponent") {
            cfg.damping.exponent = d.value().get<double>();
          } else if (dk == "offset") {
            cfg.damping.offset = d.value().get<double>();
          } else if (dk == "scale") {
            cfg.damping.scale = d.value().get<double>();
          } else if (dk == "cap") {
            cfg.damping.cap = d.value().get<double>();
          } else {
            fail(ErrorKind::InvalidArgument, "config: unknown damping key '" + dk + "'");
          }
        }
      } else if (key == "anderson_regularization") {
        cfg.anderson_regularization = v.get<double>();
      } else if (key == "n_vec") {
        cfg.n_vec = v.get<Index>();
      } else if (key == "ell") {
        cfg.ell = v.get<Index>();
      } else if (key == "max_iter") {
        cfg.max_iter = v.get<Index>();
      } else if (key == "seed") {
        cfg.seed = v.get<std::uint64_t>();
      } else if (key == "warmup_steps") {
        cfg.warmup_steps = v.get<Index>();
      } else if (key == "block_size") {
        cfg.block_size = v.get<Index>();
      } else if (key == "tol") {
        cfg.tol = v.get<double>();
      } else {
        fail(ErrorKind::InvalidArgument, "config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidArgument, std::string("config: ") + e.what());
  }
  return cfg;
}

void write_trace_csv(const IterationTrace& trace, std::ostream& out,
                     const std::optional<Vector>& q_star, Index err_window) {
  require(err_window >= 1, ErrorKind::InvalidArgument, "err_window must be >= 1");
  const bool with_b = has_b_columns(trace.config);
  const Index m = trace.config.depth;
  out << "n,a_n,res_proxy_inf";
  if (q_star) out << ",err_inf";
  if (with_b) {
    for (Index i = 1; i <= m; ++i) out << ",b_" << i;
  }
  out << ",wall_ms\n";

  Vector window_sum;
  if (q_star && !trace.steps.empty()) {
    require(q_star->size() == trace.steps.front().q.size(), ErrorKind::LengthMismatch,
            "q* has the wrong dimension");
    window_sum = Vector::Zero(q_star->size());
  }
  const auto w = static_cast<std::size_t>(err_window);
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const StepRecord& r = trace.steps[i];
    out << r.n << ',' << num(r.a) << ',' << num(r.residual_inf);
    if (q_star) {
      window_sum += r.q;
      if (i >= w) window_sum -= trace.steps[i - w].q;
      const double count = static_cast<double>(std::min(i + 1, w));
      out << ',' << num((window_sum / count - *q_star).lpNorm<Eigen::Infinity>());
    }
    if (with_b) {
      for (Index k = 0; k < m; ++k) {
        out << ',';
        if (!r.b.empty()) out << num(r.b[static_cast<std::size_t>(k)]);
      }
    }
    out << ',' << num(r.wall_ms) << '\n';
  }
}

void write_trace_csv(const IterationTrace& trace, const std::filesystem::path& path,
                     const std::optional<Vector>& q_star, Index err_window) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  write_trace_csv(trace, out, q_star, err_window);
  require(static_cast<bool>(out), ErrorKind::Io, "write failed: " + path.string());
}

std::string trace_sidecar_json(const IterationTrace& trace) {
  json j;
  j["final"] = vec_json(trace.final_iterate);
  j["averaged"] =
      trace.steps.empty() ? json(nullptr) : vec_json(averaged_iterate(trace, trace.config));
  j["steps"] = trace.steps.size();
  j["stopped_on_tol"] = trace.stopped_on_tol;
  return j.dump(2);
}

std::string vector_to_json(const Vector& v) { return vec_json(v).dump(); }

Vector vector_from_json(const std::string& text) {
  try {
    const auto v = json::parse(text).get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, std::string("vector: ") + e.what());
  }
}

}  // namespace sscf::mixing
