#include "ulhm/synthetic.hpp"

#include "ulhm/errors.hpp"
#include "ulhm/rng.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ulhm {

const char* to_string(TransformKind t) {
  switch (t) {
    case TransformKind::rotation: return "rotation";
    case TransformKind::affine: return "affine";
    case TransformKind::monotone_radial: return "monotone-radial";
  }
  return "?";
}

TransformKind transform_from_string(const std::string& name) {
  if (name == "rotation") return TransformKind::rotation;
  if (name == "affine") return TransformKind::affine;
  if (name == "monotone-radial" || name == "monotone_radial")
    return TransformKind::monotone_radial;
  throw ConfigError("unknown transform '" + name + "'");
}

namespace {

Matrix random_rotation(Index d, std::mt19937_64& rng) {
  const Matrix g = gaussian_matrix(d, d, rng);
  const Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) = -q.col(0);
  return q;
}

Matrix apply_transform(const Matrix& x, TransformKind kind, std::mt19937_64& rng,
                       Scalar separation) {
  switch (kind) {
    case TransformKind::rotation:
      return x * random_rotation(x.cols(), rng).transpose();
    case TransformKind::affine: {
      // Well-conditioned map: singular values in [0.8, 1.25] plus a shift.
      const Matrix q1 = random_rotation(x.cols(), rng);
      const Matrix q2 = random_rotation(x.cols(), rng);
      Vector s(x.cols());
      std::uniform_real_distribution<Scalar> unif(0.8, 1.25);
      for (Index i = 0; i < s.size(); ++i) s(i) = unif(rng);
      const Matrix a = q1 * s.asDiagonal() * q2.transpose();
      const Vector b = gaussian_vector(x.cols(), rng) * (0.1 * separation);
      return (x * a.transpose()).rowwise() + b.transpose();
    }
    case TransformKind::monotone_radial: {
      // f(x) = (0.6 + 0.8 r / (1 + r)) x with r = |x|: smooth, bijective,
      // radially monotone, and deliberately non-isometric.
      Matrix out(x.rows(), x.cols());
      for (Index i = 0; i < x.rows(); ++i) {
        const Scalar r = x.row(i).norm();
        out.row(i) = (0.6 + 0.8 * r / (1.0 + r)) * x.row(i);
      }
      return out;
    }
  }
  throw ConfigError("unknown transform");
}

}  // namespace

std::vector<DatasetBundle> gen_synthetic(const SyntheticSpec& spec, const std::string& split) {
  if (spec.obs_dim < 2) throw ConfigError("obs_dim must be at least 2");
  if (spec.n_classes < 1 || spec.per_class < 1 || spec.domains < 1)
    throw ConfigError("n_classes, per_class, and domains must be positive");
  if (static_cast<Index>(spec.n_classes) > spec.obs_dim)
    throw ConfigError("orthonormal blob centers need n_classes <= obs_dim");
  if (spec.noise < 0 || spec.separation <= 0 || spec.sibling_dist <= 0)
    throw ConfigError("noise must be nonnegative, separation and sibling_dist positive");

  const Index n = static_cast<Index>(spec.n_classes) * spec.per_class;

  // Centers use n_classes columns of a random orthonormal basis: one anchor
  // per coarse class, plus one anchor and one offset axis for the sibling pair.
  auto center_rng = make_rng(derive_seed(spec.seed, "centers"));
  const Matrix g = gaussian_matrix(spec.obs_dim, spec.obs_dim, center_rng);
  const Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ();
  Matrix centers(spec.n_classes, spec.obs_dim);  // C x D
  for (int c = 0; c + 2 < spec.n_classes; ++c)
    centers.row(c) = spec.separation * q.col(c).transpose();
  if (spec.n_classes == 1) {
    centers.row(0) = spec.separation * q.col(0).transpose();
  } else {
    const RowVector anchor = spec.separation * q.col(spec.n_classes - 2).transpose();
    const RowVector axis = q.col(spec.n_classes - 1).transpose();
    centers.row(spec.n_classes - 2) = anchor - 0.5 * spec.sibling_dist * axis;
    centers.row(spec.n_classes - 1) = anchor + 0.5 * spec.sibling_dist * axis;
  }

  auto noise_rng = make_rng(derive_seed(spec.seed, "noise:" + split));
  Matrix base(n, spec.obs_dim);
  Labels labels(static_cast<std::size_t>(n));
  for (int c = 0; c < spec.n_classes; ++c)
    for (int s = 0; s < spec.per_class; ++s) {
      const Index row = static_cast<Index>(c) * spec.per_class + s;
      base.row(row) =
          centers.row(c) + spec.noise * gaussian_vector(spec.obs_dim, noise_rng).transpose();
      labels[static_cast<std::size_t>(row)] = c;
    }

  std::vector<DatasetBundle> out;
  for (int k = 0; k < spec.domains; ++k) {
    DatasetBundle bundle;
    bundle.domain_tag = "domain" + std::to_string(k + 1);
    bundle.labels = labels;
    bundle.n_classes = spec.n_classes;
    if (k == 0) {
      bundle.observations = base;
    } else {
      auto rng = make_rng(derive_seed(spec.seed, "transform", static_cast<std::uint64_t>(k)));
      bundle.observations = apply_transform(base, spec.transform, rng, spec.separation);
    }
    validate(bundle);
    out.push_back(std::move(bundle));
  }
  return out;
}

std::pair<Matrix, Matrix> apply_mask(MatrixRef x, const MaskSpec& spec) {
  if (!(spec.rho > 0.0 && spec.rho <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
  const Index d = x.cols();
  const auto keep = static_cast<Index>(std::lround(spec.rho * static_cast<Scalar>(d)));
  if (keep == 0) throw ConfigError("rho keeps zero columns at this dimension");

  Matrix mask = Matrix::Zero(x.rows(), d);
  if (keep >= d) {
    mask.setOnes();
  } else {
    auto rng = make_rng(spec.seed);
    std::vector<Index> cols(static_cast<std::size_t>(d));
    for (Index i = 0; i < x.rows(); ++i) {
      std::iota(cols.begin(), cols.end(), Index{0});
      // Partial Fisher-Yates: the first `keep` entries end up uniform.
      for (Index k = 0; k < keep; ++k) {
        std::uniform_int_distribution<Index> pick(k, d - 1);
        std::swap(cols[static_cast<std::size_t>(k)], cols[static_cast<std::size_t>(pick(rng))]);
        mask(i, cols[static_cast<std::size_t>(k)]) = 1.0;
      }
    }
  }
  return {x.cwiseProduct(mask), std::move(mask)};
}

}  // namespace ulhm
