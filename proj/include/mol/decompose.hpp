#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "mol/common.hpp"
#include "mol/core.hpp"

namespace mol {

// Certificate expressing a matrix A as pi .* B1 + (1 - pi) .* B2 with both
// B factors of rank at most d. Factors share the right block:
// B1 = lambda_min * query_factor * right_factor, B2 likewise with
// lambda_max. Entries where the rank-d partial sum vanished cannot be
// matched by any lambda scaling; they are listed instead of silently
// breaking the reconstruction contract.
struct MolDecomposition {
  int d = 0;
  std::int64_t rows = 0;  // stored orientation (rows <= cols)
  std::int64_t cols = 0;
  bool transposed = false;       // input arrived as cols x rows
  bool rank_deficient = false;   // numerical rank <= d: single-component form

  Eigen::MatrixXd query_factor;  // [rows][d], singular values folded in
  Eigen::MatrixXd right_factor;  // [d][cols]
  double lambda_min = 1.0;
  double lambda_max = 1.0;
  Eigen::MatrixXd pi;            // [rows][cols], all entries in [0, 1]
  std::vector<std::pair<std::int64_t, std::int64_t>> degenerate_entries;

  Eigen::MatrixXd b1() const { return lambda_min * query_factor * right_factor; }
  Eigen::MatrixXd b2() const { return lambda_max * query_factor * right_factor; }

  // pi .* B1 + (1 - pi) .* B2, returned in the caller's orientation.
  Eigen::MatrixXd reconstruct() const {
    Eigen::MatrixXd t = query_factor * right_factor;
    Eigen::MatrixXd out =
        (pi.array() * (lambda_min * t).array() +
         (1.0 - pi.array()) * (lambda_max * t).array())
            .matrix();
    if (transposed) return out.transpose();
    return out;
  }
};

// Two-component mixture decomposition of an arbitrary matrix.
//
// Rank-d part comes from the thin SVD with singular values folded into the
// left factor. When the numerical rank already fits in d the matrix is its
// own mixture (pi identically one). Otherwise each entry's correction
// factor lambda_ij = A_ij / T_ij turns the reconstruction into a convex
// blend of the two extreme scalings of T. Entries with |T_ij| below
// 1e-12 * max|T| get the epsilon fallback lambda and are reported as
// degenerate.
inline MolDecomposition decompose(const Eigen::MatrixXd& input, int d,
                                  double epsilon = 1e-6) {
  if (input.rows() < 1 || input.cols() < 1) {
    throw ArgumentError("decompose requires a non-empty matrix");
  }
  if (!input.allFinite()) {
    throw ArgumentError("decompose requires finite matrix entries");
  }
  if (d < 1) throw ArgumentError("decompose requires rank d >= 1");
  if (d > std::min(input.rows(), input.cols())) {
    throw ArgumentError("decompose requires d <= min(rows, cols)");
  }
  if (!(epsilon > 0.0)) throw ArgumentError("decompose requires epsilon > 0");

  MolDecomposition dec;
  dec.transposed = input.rows() > input.cols();
  Eigen::MatrixXd a = input;
  if (dec.transposed) a = input.transpose();
  dec.d = d;
  dec.rows = a.rows();
  dec.cols = a.cols();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  int numerical_rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > 1e-10 * sigma_max) ++numerical_rank;
  }

  // Left factor with singular values folded: A = U' V, V orthonormal rows.
  Eigen::MatrixXd u_prime = svd.matrixU() * sigma.asDiagonal();
  Eigen::MatrixXd v = svd.matrixV().transpose();

  dec.query_factor = u_prime.leftCols(d);
  dec.right_factor = v.topRows(d);

  if (numerical_rank <= d) {
    dec.rank_deficient = true;
    dec.lambda_min = 1.0;
    dec.lambda_max = 1.0;
    dec.pi = Eigen::MatrixXd::Ones(dec.rows, dec.cols);
    return dec;
  }

  Eigen::MatrixXd t = dec.query_factor * dec.right_factor;
  const double degeneracy_cut = 1e-12 * t.cwiseAbs().maxCoeff();

  Eigen::MatrixXd lambda(dec.rows, dec.cols);
  for (std::int64_t i = 0; i < dec.rows; ++i) {
    for (std::int64_t j = 0; j < dec.cols; ++j) {
      const double tij = t(i, j);
      if (std::abs(tij) >= degeneracy_cut) {
        lambda(i, j) = a(i, j) / tij;
      } else {
        lambda(i, j) = 1.0 + (a(i, j) - tij) / epsilon;
        dec.degenerate_entries.emplace_back(i, j);
      }
    }
  }
  dec.lambda_min = lambda.minCoeff();
  dec.lambda_max = lambda.maxCoeff();

  if (dec.lambda_max == dec.lambda_min) {
    dec.pi = Eigen::MatrixXd::Ones(dec.rows, dec.cols);
  } else {
    const double range = dec.lambda_max - dec.lambda_min;
    dec.pi = ((dec.lambda_max - lambda.array()) / range).matrix();
  }
  return dec;
}

// Runnable mixture instance produced from a decomposition.
struct MolInstance {
  ItemIndexT<double> index;
  std::vector<QueryEmbeddingsT<double>> queries;
  GatingFunction gate;  // TableGate holding (pi, 1 - pi)
};

// Re-emits a decomposition as a live two-component instance: query i is row
// i of the folded left factor, item j carries both extreme scalings of the
// shared right column, and a table gate blends them with (pi, 1 - pi).
// Scoring query i against item j reproduces A (stored orientation) at every
// non-degenerate entry.
inline MolInstance to_mol_instance(const MolDecomposition& dec) {
  if (dec.d < 1 || dec.rows < 1 || dec.cols < 1) {
    throw ArgumentError("to_mol_instance requires a valid decomposition");
  }
  ComponentConfig config;
  config.query_components = 1;
  config.item_components = 2;
  config.dim = dec.d;
  config.normalized = false;

  MolInstance instance;

  std::vector<double> item_data(size_t(dec.cols) * 2 * dec.d);
  for (std::int64_t j = 0; j < dec.cols; ++j) {
    double* comp1 = item_data.data() + size_t(j) * 2 * dec.d;
    double* comp2 = comp1 + dec.d;
    for (int t = 0; t < dec.d; ++t) {
      comp1[t] = dec.lambda_min * dec.right_factor(t, j);
      comp2[t] = dec.lambda_max * dec.right_factor(t, j);
    }
  }
  std::vector<std::uint64_t> ids(static_cast<size_t>(dec.cols));
  for (std::int64_t j = 0; j < dec.cols; ++j) ids[size_t(j)] = std::uint64_t(j);
  instance.index = build_item_index(config, std::move(item_data), std::move(ids));

  instance.queries.reserve(size_t(dec.rows));
  for (std::int64_t i = 0; i < dec.rows; ++i) {
    std::vector<double> qv(static_cast<size_t>(dec.d));
    for (int t = 0; t < dec.d; ++t) qv[size_t(t)] = dec.query_factor(i, t);
    instance.queries.push_back(build_query(config, std::move(qv), i));
  }

  TableGate gate;
  gate.n_queries = dec.rows;
  gate.n_items = dec.cols;
  gate.components = 2;
  gate.weights.resize(size_t(dec.rows) * dec.cols * 2);
  for (std::int64_t i = 0; i < dec.rows; ++i) {
    for (std::int64_t j = 0; j < dec.cols; ++j) {
      const double p = dec.pi(i, j);
      gate.weights[(size_t(i) * dec.cols + j) * 2] = p;
      gate.weights[(size_t(i) * dec.cols + j) * 2 + 1] = 1.0 - p;
    }
  }
  instance.gate = std::move(gate);
  return instance;
}

}  // namespace mol
