#pragma once

#include "docp/problems/affine_quadratic.hpp"

#include <json.hpp>

namespace docp {

inline constexpr const char* kProblemFormat = "aq-ocp/1";

/// JSON problem file for affine-quadratic instances. Costs follow the
/// x' diag(Q) x convention (cost_scale = 1).
inline nlohmann::json affine_quadratic_to_json(const AffineQuadratic& p) {
  auto vec = [](const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  auto mat = [](const Matrix& m) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      rows.emplace_back();
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        rows.back().push_back(m(i, j));
    }
    return rows;
  };
  nlohmann::json j;
  j["format"] = kProblemFormat;
  j["n_x"] = p.n_x;
  j["n_u"] = p.n_u;
  j["T"] = p.horizon;
  j["Q"] = vec(p.w_x);
  j["R"] = vec(p.w_u);
  j["A"] = mat(p.A);
  j["B"] = mat(p.B);
  j["b_affine"] = vec(p.b_affine);
  j["x_s"] = vec(p.x_s);
  return j;
}

inline AffineQuadratic affine_quadratic_from_json(const nlohmann::json& j) {
  if (!j.contains("format") || j.at("format").get<std::string>() != kProblemFormat)
    throw Error("problem file: missing or unsupported format key");
  AffineQuadratic p;
  p.n_x = j.at("n_x").get<int>();
  p.n_u = j.at("n_u").get<int>();
  p.horizon = j.at("T").get<int>();
  require(p.n_x >= 1 && p.n_u >= 1 && p.horizon >= 1,
          "problem file: dimensions must be positive");
  p.cost_scale = 1.0;

  auto vec = [](const nlohmann::json& a, Eigen::Index n, const char* name) {
    auto v = a.get<std::vector<double>>();
    require(static_cast<Eigen::Index>(v.size()) == n,
            std::string("problem file: bad length for ") + name);
    return Eigen::Map<const Vector>(v.data(), n).eval();
  };
  auto mat = [](const nlohmann::json& a, Eigen::Index rows, Eigen::Index cols,
                const char* name) {
    auto rv = a.get<std::vector<std::vector<double>>>();
    require(static_cast<Eigen::Index>(rv.size()) == rows,
            std::string("problem file: bad row count for ") + name);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      require(static_cast<Eigen::Index>(rv[i].size()) == cols,
              std::string("problem file: bad column count for ") + name);
      for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = rv[i][j2];
    }
    return m;
  };
  p.w_x = vec(j.at("Q"), p.n_x, "Q");
  p.w_u = vec(j.at("R"), p.n_u, "R");
  p.A = mat(j.at("A"), p.n_x, p.n_x, "A");
  p.B = mat(j.at("B"), p.n_x, p.n_u, "B");
  p.b_affine = vec(j.at("b_affine"), p.n_x, "b_affine");
  p.x_s = vec(j.at("x_s"), p.n_x, "x_s");
  return p;
}

}  // namespace docp
