#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "argos/error.hpp"
#include "argos/evalkit.hpp"

namespace argos::evalkit {

namespace {

Eigen::MatrixXd to_matrix(const std::vector<EmbeddingVector>& vs) {
  const auto d = static_cast<Eigen::Index>(vs.front().dims());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(vs.size()), d);
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (static_cast<Eigen::Index>(vs[i].dims()) != d) {
      throw Error(ErrorCode::DimensionMismatch, "embedding set has mixed dims");
    }
    for (Eigen::Index j = 0; j < d; ++j) m(static_cast<Eigen::Index>(i), j) = vs[i].values[static_cast<std::size_t>(j)];
  }
  return m;
}

Eigen::MatrixXd centered(const Eigen::MatrixXd& m) { return m.rowwise() - m.colwise().mean(); }

void require_two(const EmbeddingSet& set) {
  if (set.vectors.size() < 2) throw Error(ErrorCode::TooFewVectors, set.label);
}

double distance(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dims() != b.dims()) throw Error(ErrorCode::DimensionMismatch, "distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dims(); ++i) s += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
  return std::sqrt(s);
}

double mean_pairwise_cosine(const std::vector<EmbeddingVector>& diffs, const std::string& label) {
  if (diffs.size() < 2) throw Error(ErrorCode::TooFewVectors, label);
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    for (std::size_t j = i + 1; j < diffs.size(); ++j) {
      sum += embedding::cosine(diffs[i], diffs[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

}  // namespace

double effective_rank(const EmbeddingSet& set) {
  require_two(set);
  const auto& vs = set.vectors;
  if (std::all_of(vs.begin(), vs.end(), [&](const EmbeddingVector& v) { return v == vs.front(); })) {
    throw Error(ErrorCode::DegenerateSet, set.label);
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered(to_matrix(vs)));
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double smax = sigma.size() ? sigma.maxCoeff() : 0.0;
  if (!(smax > 0.0)) throw Error(ErrorCode::DegenerateSet, set.label);

  double total = 0.0;
  for (double s : sigma) {
    if (s >= 1e-12 * smax) total += s;
  }
  double entropy = 0.0;
  for (double s : sigma) {
    if (s < 1e-12 * smax) continue;
    double p = s / total;
    entropy -= p * std::log(p);
  }
  return std::exp(entropy);
}

double centroid_shift(const EmbeddingSet& set, const EmbeddingSet& anchor) {
  auto a = embedding::centroid(set.vectors);
  auto b = embedding::centroid(anchor.vectors);
  return distance(a, b);
}

double diversity(const EmbeddingSet& set) {
  require_two(set);
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < set.vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < set.vectors.size(); ++j) {
      sum += distance(set.vectors[i], set.vectors[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

std::optional<double> cse(const EmbeddingSet& set, const EmbeddingSet& anchor, double eps_shift) {
  double shift = centroid_shift(set, anchor);
  if (shift < eps_shift) return std::nullopt;
  return diversity(set) / shift;
}

double directional_similarity(const EmbeddingSet& set, const EmbeddingVector& seed, std::size_t* excluded) {
  return directional_similarity(set, std::vector<EmbeddingVector>(set.vectors.size(), seed), excluded);
}

double directional_similarity(const EmbeddingSet& set, const std::vector<EmbeddingVector>& seeds,
                              std::size_t* excluded) {
  if (seeds.size() != set.vectors.size()) {
    throw Error(ErrorCode::InvalidArgument, "one seed vector per set member expected");
  }
  std::vector<EmbeddingVector> diffs;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& v = set.vectors[i];
    if (v.dims() != seeds[i].dims()) throw Error(ErrorCode::DimensionMismatch, set.label);
    EmbeddingVector d{std::vector<double>(v.dims())};
    for (std::size_t k = 0; k < v.dims(); ++k) d.values[k] = v.values[k] - seeds[i].values[k];
    if (embedding::l2_norm(d) == 0.0) {
      ++skipped;
      continue;
    }
    diffs.push_back(std::move(d));
  }
  if (excluded) *excluded = skipped;
  return mean_pairwise_cosine(diffs, set.label);
}

double aligned_variance(const std::vector<EmbeddingSet>& sets, std::string_view target_label, int p) {
  if (p < 1) throw Error(ErrorCode::InvalidArgument, "aligned_variance needs p >= 1");
  auto target = std::find_if(sets.begin(), sets.end(), [&](const EmbeddingSet& s) { return s.label == target_label; });
  if (target == sets.end()) throw Error(ErrorCode::InvalidArgument, "no set labeled " + std::string(target_label));

  std::vector<EmbeddingVector> pooled;
  for (const auto& s : sets) pooled.insert(pooled.end(), s.vectors.begin(), s.vectors.end());
  if (pooled.size() < 2) throw Error(ErrorCode::TooFewVectors, "pooled sets");
  if (target->vectors.size() < 2) return 0.0;

  Eigen::MatrixXd xc = centered(to_matrix(pooled));
  Eigen::MatrixXd cov = (xc.transpose() * xc) / static_cast<double>(pooled.size() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd& lambda = eig.eigenvalues();  // ascending
  const double lmax = lambda.size() ? lambda.maxCoeff() : 0.0;
  if (!(lmax > 0.0)) return 0.0;

  const Eigen::Index d = lambda.size();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (lambda(i) > 1e-12 * lmax) ++rank;
  }
  const Eigen::Index m = std::min<Eigen::Index>(p, rank);
  Eigen::MatrixXd basis(d, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - j);
    for (Eigen::Index k = 0; k < d; ++k) {
      if (std::abs(v(k)) > 1e-12) {
        if (v(k) < 0) v = -v;
        break;
      }
    }
    basis.col(j) = v;
  }

  Eigen::MatrixXd proj = centered(to_matrix(target->vectors)) * basis;
  const double denom = static_cast<double>(target->vectors.size() - 1);
  return (proj.array().square().colwise().sum() / denom).mean();
}

}  // namespace argos::evalkit
