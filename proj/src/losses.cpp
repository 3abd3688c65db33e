#include "ulhm/losses.hpp"

#include "ulhm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace ulhm {

LossGrad loss_recon(MatrixRef decoded, MatrixRef target, Likelihood likelihood) {
  if (decoded.rows() != target.rows() || decoded.cols() != target.cols())
    throw DimensionError("decoded and target shapes differ");
  if (likelihood == Likelihood::categorical)
    throw ConfigError("categorical likelihood takes class indices; use the labels overload");
  const Scalar n = static_cast<Scalar>(decoded.size());

  LossGrad out;
  if (likelihood == Likelihood::gaussian) {
    const Matrix diff = decoded - target;
    out.value = diff.array().square().sum() / n;
    out.grad = 2.0 * diff / n;
    return out;
  }

  // Bernoulli with logits x and targets t: softplus(x) - x t per element,
  // written with |x| so large magnitudes cannot overflow.
  if ((target.array() != 0.0 && target.array() != 1.0).any())
    throw DataError("bernoulli targets must be 0 or 1");
  const auto x = decoded.array();
  const auto t = target.array();
  out.value = (x.max(0.0) - x * t + (-x.abs()).exp().log1p()).sum() / n;
  out.grad = ((1.0 / (1.0 + (-x).exp())) - t) / n;
  return out;
}

LossGrad loss_cross_entropy(MatrixRef logits, const Labels& labels) {
  const Index n = logits.rows();
  const Index c = logits.cols();
  if (static_cast<Index>(labels.size()) != n)
    throw DimensionError("label count does not match logit rows");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || labels[i] >= c)
      throw DataError("label out of range", static_cast<long>(i));

  LossGrad out;
  out.grad.resize(n, c);
  for (Index i = 0; i < n; ++i) {
    const Scalar m = logits.row(i).maxCoeff();
    const RowVector shifted = logits.row(i).array() - m;
    const RowVector exps = shifted.array().exp();
    const Scalar z = exps.sum();
    out.value += std::log(z) - shifted(labels[static_cast<std::size_t>(i)]);
    out.grad.row(i) = exps / z;
    out.grad(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  }
  out.value /= static_cast<Scalar>(n);
  out.grad /= static_cast<Scalar>(n);
  return out;
}

LossGrad loss_recon(MatrixRef logits, const Labels& target) {
  return loss_cross_entropy(logits, target);
}

GroupLossGrad loss_consist(const std::vector<Matrix>& z_groups, const LossWeights& w) {
  if (z_groups.empty()) throw EmptyError("no latent groups");
  const Index n = z_groups.front().rows();
  const Index d = z_groups.front().cols();
  for (const auto& z : z_groups)
    if (z.rows() != n || z.cols() != d) throw DimensionError("latent groups differ in shape");

  GroupLossGrad out;
  for (const auto& z : z_groups) out.grads.push_back(Matrix::Zero(n, d));

  for (std::size_t g = 0; g < z_groups.size(); ++g)
    for (std::size_t h = g + 1; h < z_groups.size(); ++h)
      for (Index i = 0; i < n; ++i) {
        const RowVector u = z_groups[g].row(i);
        const RowVector v = z_groups[h].row(i);
        if (w.lambda_cos != 0) {
          const Scalar nu = u.norm();
          const Scalar nv = v.norm();
          if (nu == 0 || nv == 0)
            throw DegenerateError("zero-norm latent row " + std::to_string(i) +
                                  " under cosine consistency");
          const Scalar cosine = u.dot(v) / (nu * nv);
          out.value += w.lambda_cos * (1.0 - cosine);
          out.grads[g].row(i) += w.lambda_cos * (cosine * u / (nu * nu) - v / (nu * nv));
          out.grads[h].row(i) += w.lambda_cos * (cosine * v / (nv * nv) - u / (nu * nv));
        }
        if (w.lambda_eucl != 0) {
          const RowVector diff = u - v;
          out.value += w.lambda_eucl * diff.squaredNorm();
          out.grads[g].row(i) += 2.0 * w.lambda_eucl * diff;
          out.grads[h].row(i) -= 2.0 * w.lambda_eucl * diff;
        }
      }
  return out;
}

LossGrad loss_local(MatrixRef z, const NeighborLists& nbrs) {
  if (nbrs.size() != z.rows()) throw DimensionError("neighbor lists do not match latent rows");
  LossGrad out;
  out.grad = Matrix::Zero(z.rows(), z.cols());
  for (Index i = 0; i < z.rows(); ++i)
    for (int k = 0; k < nbrs.kappa; ++k) {
      const Index j = nbrs.indices(i, k);
      const RowVector diff = z.row(i) - z.row(j);
      out.value += diff.squaredNorm();
      out.grad.row(i) += 2.0 * diff;
      out.grad.row(j) -= 2.0 * diff;
    }
  return out;
}

ContrastiveResult loss_contrastive(MatrixRef z, const Labels& labels,
                                   const std::vector<int>& domain_ids, Scalar temperature) {
  const Index n = z.rows();
  if (temperature <= 0) throw ConfigError("temperature must be positive");
  if (static_cast<Index>(labels.size()) != n || static_cast<Index>(domain_ids.size()) != n)
    throw DimensionError("labels/domains do not match latent rows");
  if (n < 2) throw DegenerateError("contrastive loss needs at least 2 samples");

  Matrix unit(n, z.cols());
  Vector norms(n);
  for (Index i = 0; i < n; ++i) {
    norms(i) = z.row(i).norm();
    if (norms(i) == 0)
      throw DegenerateError("zero-norm latent row " + std::to_string(i) + " in contrastive loss");
    unit.row(i) = z.row(i) / norms(i);
  }
  const Matrix sim = unit * unit.transpose();

  // dL/dsim(i,j) for j != i: each anchor i contributes |P_i| * softmax_i(j)
  // from the shared denominator minus 1 on its positive columns.
  ContrastiveResult out;
  Matrix dsim = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    std::vector<Index> positives;
    for (Index j = 0; j < n; ++j)
      if (j != i && labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)] &&
          domain_ids[static_cast<std::size_t>(j)] != domain_ids[static_cast<std::size_t>(i)])
        positives.push_back(j);
    if (positives.empty()) {
      ++out.n_skipped;
      continue;
    }

    Scalar shift = -std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < n; ++j)
      if (j != i) shift = std::max(shift, sim(i, j) / temperature);
    Scalar denom = 0;
    for (Index j = 0; j < n; ++j)
      if (j != i) denom += std::exp(sim(i, j) / temperature - shift);
    const Scalar log_denom = std::log(denom) + shift;

    const Scalar p_count = static_cast<Scalar>(positives.size());
    for (Index j : positives) out.value += log_denom - sim(i, j) / temperature;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      dsim(i, j) += p_count * std::exp(sim(i, j) / temperature - log_denom) / temperature;
    }
    for (Index j : positives) dsim(i, j) -= 1.0 / temperature;
  }

  out.grad = Matrix::Zero(n, z.cols());
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (j == i || dsim(i, j) == 0) continue;
      // sim(i,j) = u_i . u_j with unit rows; chain through the normalization.
      const RowVector du_i = (unit.row(j) - sim(i, j) * unit.row(i)) / norms(i);
      const RowVector du_j = (unit.row(i) - sim(i, j) * unit.row(j)) / norms(j);
      out.grad.row(i) += dsim(i, j) * du_i;
      out.grad.row(j) += dsim(i, j) * du_j;
    }
  return out;
}

LossGrad loss_centroid(MatrixRef z, const Labels& labels, const std::vector<int>& domain_ids) {
  const Index n = z.rows();
  if (static_cast<Index>(labels.size()) != n || static_cast<Index>(domain_ids.size()) != n)
    throw DimensionError("labels/domains do not match latent rows");

  std::map<std::pair<int, int>, std::vector<Index>> cells;  // (class, domain) -> rows
  for (Index i = 0; i < n; ++i)
    cells[{labels[static_cast<std::size_t>(i)], domain_ids[static_cast<std::size_t>(i)]}]
        .push_back(i);

  std::map<std::pair<int, int>, RowVector> centroids;
  for (const auto& [key, rows] : cells) {
    RowVector mu = RowVector::Zero(z.cols());
    for (Index i : rows) mu += z.row(i);
    centroids[key] = mu / static_cast<Scalar>(rows.size());
  }

  std::set<int> classes, domains;
  for (int y : labels) classes.insert(y);
  for (int k : domain_ids) domains.insert(k);

  LossGrad out;
  out.grad = Matrix::Zero(n, z.cols());
  for (int c : classes)
    for (auto ka = domains.begin(); ka != domains.end(); ++ka)
      for (auto kb = std::next(ka); kb != domains.end(); ++kb) {
        const auto cell_a = cells.find({c, *ka});
        const auto cell_b = cells.find({c, *kb});
        if (cell_a == cells.end() || cell_b == cells.end()) continue;
        const RowVector diff = centroids[{c, *ka}] - centroids[{c, *kb}];
        out.value += diff.squaredNorm();
        for (Index i : cell_a->second)
          out.grad.row(i) += 2.0 * diff / static_cast<Scalar>(cell_a->second.size());
        for (Index i : cell_b->second)
          out.grad.row(i) -= 2.0 * diff / static_cast<Scalar>(cell_b->second.size());
      }
  return out;
}

}  // namespace ulhm
