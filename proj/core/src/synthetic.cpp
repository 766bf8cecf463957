#include "vlanet/synthetic.hpp"
#include "vlanet/error.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <algorithm>
#include <random>

namespace vlanet {

namespace fs = std::filesystem;

namespace {

std::string numbered(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%04zu", prefix, i);
  return buf;
}

double cosine(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na < kNormEpsilon || nb < kNormEpsilon) return 0.0;
  return a.dot(b) / (na * nb);
}

// Values as they will read back from the f32 feature files.
Matrix as_stored(Matrix m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(m.data()[i]);
  return m;
}

}  // namespace

SyntheticResult generate_synthetic(const SyntheticSpec& spec, const fs::path& out_dir) {
  if (spec.min_planted < 1 || spec.min_planted > spec.max_planted) {
    throw ConfigError("planted length range must satisfy 1 <= min <= max");
  }
  if (spec.max_planted > spec.frames) {
    throw ConfigError("planted interval length " + std::to_string(spec.max_planted) +
                      " exceeds frames per video " + std::to_string(spec.frames));
  }
  if (spec.noise < 0.0) throw ConfigError("noise sigma must be >= 0");
  if (spec.raw_dim == 0 || spec.concept_dim == 0 || spec.concept_dim > spec.raw_dim) {
    throw ConfigError("need 1 <= concept_dim <= raw_dim");
  }
  if (spec.min_tokens < 1 || spec.min_tokens > spec.max_tokens) {
    throw ConfigError("token count range must satisfy 1 <= min <= max");
  }
  if (spec.videos + spec.test_videos == 0) throw ConfigError("no videos requested");

  const auto dim = static_cast<Eigen::Index>(spec.raw_dim);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Orthonormal basis of the concept subspace.
  Matrix basis(static_cast<Eigen::Index>(spec.concept_dim), dim);
  for (Eigen::Index r = 0; r < basis.rows(); ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) basis(r, c) = gauss(rng);
    for (Eigen::Index p = 0; p < r; ++p) basis.row(r) -= basis.row(r).dot(basis.row(p)) * basis.row(p);
    basis.row(r).normalize();
  }

  SyntheticResult result;
  Manifest& m = result.manifest;
  m.name = "synthetic";
  m.mode = DatasetMode::kFrameGrid;
  m.grid = spec.grid;
  m.root = out_dir;

  const std::size_t total = spec.videos + spec.test_videos;
  std::vector<Eigen::RowVectorXd> planted_means(total);
  std::vector<Eigen::RowVectorXd> token_means(total);

  for (std::size_t i = 0; i < total; ++i) {
    Eigen::RowVectorXd coeffs(basis.rows());
    for (Eigen::Index c = 0; c < coeffs.size(); ++c) coeffs(c) = gauss(rng);
    Eigen::RowVectorXd concept_vec = coeffs * basis;
    concept_vec.normalize();

    std::uniform_int_distribution<std::int64_t> length_dist(spec.min_planted, spec.max_planted);
    const std::int64_t length = length_dist(rng);
    std::uniform_int_distribution<std::int64_t> start_dist(0, spec.frames - length);
    const std::int64_t start = start_dist(rng);
    const Interval gt{start, start + length};

    Matrix frames(spec.frames, dim);
    for (Eigen::Index t = 0; t < frames.rows(); ++t) {
      for (Eigen::Index c = 0; c < dim; ++c) frames(t, c) = spec.noise * gauss(rng);
      if (t >= gt.start && t < gt.end) frames.row(t) += concept_vec;
    }

    std::uniform_int_distribution<std::size_t> token_dist(spec.min_tokens, spec.max_tokens);
    const std::size_t token_count = token_dist(rng);
    const std::size_t concept_tokens = std::max<std::size_t>(1, token_count / 2);
    std::vector<bool> is_concept(token_count, false);
    for (std::size_t k = 0; k < concept_tokens; ++k) is_concept[k] = true;
    std::shuffle(is_concept.begin(), is_concept.end(), rng);
    Matrix tokens(static_cast<Eigen::Index>(token_count), dim);
    const double distractor_sd = spec.distractor_norm / std::sqrt(static_cast<double>(dim));
    for (std::size_t k = 0; k < token_count; ++k) {
      const auto r = static_cast<Eigen::Index>(k);
      if (is_concept[k]) {
        for (Eigen::Index c = 0; c < dim; ++c) tokens(r, c) = concept_vec(c) + spec.noise * gauss(rng);
      } else {
        for (Eigen::Index c = 0; c < dim; ++c) tokens(r, c) = distractor_sd * gauss(rng);
      }
    }

    const Matrix stored_frames = as_stored(frames);
    const Matrix stored_tokens = as_stored(tokens);
    planted_means[i] = stored_frames.middleRows(gt.start, gt.length()).colwise().mean();
    token_means[i] = stored_tokens.colwise().mean();

    const std::string vid = numbered('v', i);
    const std::string qid = numbered('q', i);
    const std::string vpath = "features/" + vid + ".bin";
    const std::string qpath = "tokens/" + qid + ".bin";
    write_features(out_dir / vpath, frames);
    write_features(out_dir / qpath, tokens);
    m.videos.push_back({vid, spec.frames, vpath});
    QueryEntry q;
    q.id = qid;
    q.tokens = qpath;
    m.queries.push_back(std::move(q));
    m.pairs.push_back({vid, qid, i < spec.videos ? "train" : "test", gt});
  }

  result.separation_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < total; ++i) {
    const double own = cosine(planted_means[i], token_means[i]);
    double best_other = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < total; ++j) {
      if (j != i) best_other = std::max(best_other, cosine(planted_means[i], token_means[j]));
    }
    if (total == 1) best_other = -1.0;
    result.separation_margin = std::min(result.separation_margin, own - best_other);
    if (!(own > best_other)) ++result.separation_violations;
  }

  validate_manifest(m);
  save_manifest(out_dir / "manifest.json", m);
  return result;
}

}  // namespace vlanet
