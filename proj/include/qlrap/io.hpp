#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qlrap/core.hpp"
#include "qlrap/solver.hpp"
#include "qlrap/variational.hpp"

namespace qlrap {

using Json = nlohmann::json;

// On-disk state description: either explicit entries
//   {"dim": d, "entries": [[[re, im], ...], ...], "label": ..., "seed": ...}
// or the spectrum shorthand
//   {"spectrum": [...], "basis": "computational" | [[[re, im], ...], ...]}.
struct MatrixFile {
  Index dim = 0;
  CMatrix entries;
  std::optional<std::string> label;
  std::optional<std::uint64_t> seed;
};

// Reports print 12 significant digits; files keep full precision.
inline std::string format_real(double v, int significant = 12) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", significant, v);
  return buf;
}

namespace detail {

inline CMatrix matrix_from_json_entries(const Json& rows, Index d) {
  if (!rows.is_array() || static_cast<Index>(rows.size()) != d)
    throw ParseError("entries must be a dim x dim array");
  CMatrix m(d, d);
  for (Index i = 0; i < d; ++i) {
    const Json& row = rows[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != d)
      throw ParseError("entries must be a dim x dim array");
    for (Index j = 0; j < d; ++j) {
      const Json& cell = row[static_cast<size_t>(j)];
      if (!cell.is_array() || cell.size() != 2 || !cell[0].is_number() || !cell[1].is_number())
        throw ParseError("each entry must be an [re, im] pair");
      m(i, j) = ComplexScalar(cell[0].get<double>(), cell[1].get<double>());
    }
  }
  return m;
}

inline Json matrix_to_json_entries(const CMatrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j)
      row.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline MatrixFile parse_matrix_json(const Json& j, const Tolerances& tol = {}) {
  if (!j.is_object()) throw ParseError("state file must be a JSON object");
  MatrixFile f;
  if (j.contains("label")) f.label = j.at("label").get<std::string>();
  if (j.contains("seed")) f.seed = j.at("seed").get<std::uint64_t>();

  if (j.contains("spectrum")) {
    const Json& spec = j.at("spectrum");
    if (!spec.is_array() || spec.empty()) throw ParseError("spectrum must be a non-empty array");
    const Index d = static_cast<Index>(spec.size());
    RVector values(d);
    for (Index i = 0; i < d; ++i) {
      if (!spec[static_cast<size_t>(i)].is_number())
        throw ParseError("spectrum entries must be numbers");
      values[i] = spec[static_cast<size_t>(i)].get<double>();
    }
    CMatrix basis = CMatrix::Identity(d, d);
    if (j.contains("basis") && !(j.at("basis").is_string() &&
                                 j.at("basis").get<std::string>() == "computational")) {
      basis = detail::matrix_from_json_entries(j.at("basis"), d);
      const double u = (basis.adjoint() * basis - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
      if (u > tol.ortho_tol) throw ParseError("basis is not unitary");
    }
    f.dim = d;
    f.entries = basis * values.asDiagonal() * basis.adjoint();
    return f;
  }

  if (!j.contains("dim") || !j.contains("entries"))
    throw ParseError("state file needs dim+entries or a spectrum");
  f.dim = j.at("dim").get<Index>();
  if (f.dim < 1) throw ParseError("dim must be >= 1");
  f.entries = detail::matrix_from_json_entries(j.at("entries"), f.dim);
  return f;
}

inline MatrixFile read_matrix_file(const std::string& path, const Tolerances& tol = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ParseError("invalid JSON in " + path + ": " + e.what());
  }
  return parse_matrix_json(j, tol);
}

inline Json matrix_to_json(const CMatrix& m, std::optional<std::string> label = {},
                           std::optional<std::uint64_t> seed = {}) {
  Json j;
  j["dim"] = m.rows();
  j["entries"] = detail::matrix_to_json_entries(m);
  if (label) j["label"] = *label;
  if (seed) j["seed"] = *seed;
  return j;
}

inline void write_matrix_file(const std::string& path, const CMatrix& m,
                              std::optional<std::string> label = {},
                              std::optional<std::uint64_t> seed = {}) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << matrix_to_json(m, std::move(label), std::move(seed)).dump(2) << "\n";
}

inline DensityMatrix read_density_file(const std::string& path, const Tolerances& tol = {}) {
  const MatrixFile f = read_matrix_file(path, tol);
  return validate_density(HermitianOperator(f.entries, tol), tol);
}

// Comma-separated eigenvalue shorthand, e.g. "0.41,0.39,0.2,0": a diagonal
// state in the computational basis.
inline DensityMatrix parse_spectrum_string(const std::string& csv, const Tolerances& tol = {}) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      const double v = std::stod(item, &used);
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw ParseError("bad spectrum entry: " + item);
      values.push_back(v);
    } catch (const std::invalid_argument&) {
      throw ParseError("bad spectrum entry: " + item);
    } catch (const std::out_of_range&) {
      throw ParseError("spectrum entry out of range: " + item);
    }
  }
  if (values.empty()) throw ParseError("empty spectrum");
  const Index d = static_cast<Index>(values.size());
  CMatrix m = CMatrix::Zero(d, d);
  for (Index i = 0; i < d; ++i) m(i, i) = values[static_cast<size_t>(i)];
  return validate_density(HermitianOperator(std::move(m), tol), tol);
}

// Contour-sweep grid over the two leading candidate weights; remaining
// coordinates are pinned to zero (rank-2 sweep semantics).
struct SweepGrid {
  double lo1 = 0.0, hi1 = 1.0;
  double lo2 = 0.0, hi2 = 1.0;
  int resolution = 201;
  Metric metric = Metric::HilbertSchmidt;
};

// CSV schema (flags first, then data, documented in the README):
//   on_trace_constraint,in_optimal_set,lambda_sigma_1,lambda_sigma_2,distance
// Distances are evaluated co-diagonally against rho's spectrum, including
// off-constraint (unnormalized) grid points, so the output traces the full
// contour landscape. Rows are emitted in grid order, axis 1 outer.
inline void write_sweep_csv(std::ostream& os, const DensityMatrix& rho, const SweepGrid& grid,
                            const Tolerances& tol = {}) {
  check_rank_bound(2, rho.dim());
  if (grid.resolution < 2) throw Error("sweep resolution must be >= 2");
  for (double v : {grid.lo1, grid.hi1, grid.lo2, grid.hi2})
    if (v < 0.0 || v > 1.0) throw Error("sweep ranges must lie in [0, 1]");

  const RVector& lambda = rho.eigenvalues();
  const Index d = rho.dim();
  const double tail_sq = lambda.tail(d - 2).squaredNorm();
  const double tail_abs = lambda.tail(d - 2).sum();
  const bool hs = grid.metric == Metric::HilbertSchmidt;
  const double optimum = hs ? solve_hs_distance(rho, 2, tol) : solve_trace_distance(rho, 2, tol);

  os << "on_trace_constraint,in_optimal_set,lambda_sigma_1,lambda_sigma_2,distance\n";
  const int n = grid.resolution;
  for (int i = 0; i < n; ++i) {
    const double x = grid.lo1 + (grid.hi1 - grid.lo1) * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double y = grid.lo2 + (grid.hi2 - grid.lo2) * j / (n - 1);
      const double e1 = x - lambda[0];
      const double e2 = y - lambda[1];
      const double dist =
          hs ? e1 * e1 + e2 * e2 + tail_sq : 0.5 * (std::abs(e1) + std::abs(e2) + tail_abs);
      const bool on_constraint = std::abs(x + y - 1.0) <= 1e-12;
      const bool in_optimal = on_constraint && dist <= optimum + 1e-9;
      os << (on_constraint ? '1' : '0') << ',' << (in_optimal ? '1' : '0') << ','
         << format_real(x) << ',' << format_real(y) << ',' << format_real(dist) << '\n';
    }
  }
}

// Runtime configuration: every tolerance plus the optimizer knobs, loadable
// from a JSON file via --config. Unknown keys are rejected to catch typos.
struct Config {
  Tolerances tolerances;
  OptimizeConfig optimizer;
};

inline Config parse_config_json(const Json& j) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  Config cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "tolerances") {
      for (const auto& [tk, tv] : value.items()) {
        if (tk == "herm_tol") cfg.tolerances.herm_tol = tv.get<double>();
        else if (tk == "trace_tol") cfg.tolerances.trace_tol = tv.get<double>();
        else if (tk == "psd_tol") cfg.tolerances.psd_tol = tv.get<double>();
        else if (tk == "ortho_tol") cfg.tolerances.ortho_tol = tv.get<double>();
        else if (tk == "recon_tol") cfg.tolerances.recon_tol = tv.get<double>();
        else if (tk == "proj_tol") cfg.tolerances.proj_tol = tv.get<double>();
        else if (tk == "sum_tol") cfg.tolerances.sum_tol = tv.get<double>();
        else if (tk == "imag_tol") cfg.tolerances.imag_tol = tv.get<double>();
        else if (tk == "rank_tol") cfg.tolerances.rank_tol = tv.get<double>();
        else if (tk == "degeneracy_tol") cfg.tolerances.degeneracy_tol = tv.get<double>();
        else throw ParseError("unknown tolerance key: " + tk);
      }
    } else if (key == "optimizer") {
      for (const auto& [ok, ov] : value.items()) {
        if (ok == "max_iters") cfg.optimizer.max_iters = ov.get<int>();
        else if (ok == "restarts") cfg.optimizer.restarts = ov.get<int>();
        else if (ok == "initial_step") cfg.optimizer.initial_step = ov.get<double>();
        else if (ok == "convergence_tol") cfg.optimizer.convergence_tol = ov.get<double>();
        else if (ok == "seed") cfg.optimizer.seed = ov.get<std::uint64_t>();
        else if (ok == "noise_sigma") cfg.optimizer.noise_sigma = ov.get<double>();
        else if (ok == "armijo_c") cfg.optimizer.armijo_c = ov.get<double>();
        else throw ParseError("unknown optimizer key: " + ok);
      }
    } else {
      throw ParseError("unknown config key: " + key);
    }
  }
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ParseError("invalid JSON in " + path + ": " + e.what());
  }
  return parse_config_json(j);
}

}  // namespace qlrap
