#ifndef LQHIER_CHECKPOINT_HPP
#define LQHIER_CHECKPOINT_HPP

#include <fstream>
#include <iomanip>
#include <string>

#include "lqhier/hierarchy.hpp"

namespace lqhier {

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << std::setprecision(17);
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  return in;
}

inline void write_vector(std::ostream& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << v[i];
  out << '\n';
}

inline Vector read_vector(std::istream& in, Eigen::Index size, const std::string& what) {
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i)
    if (!(in >> v[i])) throw std::runtime_error("truncated " + what);
  return v;
}

inline void expect_token(std::istream& in, const std::string& token, const std::string& path) {
  std::string got;
  if (!(in >> got) || got != token)
    throw std::runtime_error("malformed file " + path + ": expected '" + token + "'");
}

}  // namespace detail

// Flat text export of the basis snapshots: a "n N" header line followed by
// the N columns in order, n values each (column-major).
inline void save_basis(const std::string& path, const ReducedBasis& basis) {
  auto out = detail::open_out(path);
  out << basis.dim() << ' ' << basis.size() << '\n';
  for (const Vector& v : basis.vectors) detail::write_vector(out, v);
}

// Rebuilds a basis from a flat export by replaying the extension sequence, so
// the orthonormal factorization matches one grown online.  Provenance is not
// part of the flat format and comes back empty.
inline ReducedBasis load_basis(const std::string& path) {
  auto in = detail::open_in(path);
  Eigen::Index n = 0;
  int N = 0;
  if (!(in >> n >> N) || n < 0 || N < 0) throw std::runtime_error("malformed basis file " + path);
  ReducedBasis basis;
  for (int i = 0; i < N; ++i) {
    const Vector v = detail::read_vector(in, n, "basis file " + path);
    if (extend_basis(basis, v, Parameter()) != ExtendOutcome::appended)
      throw std::runtime_error("basis file " + path + " contains dependent columns");
  }
  return basis;
}

// Full hierarchy checkpoint: basis with provenance, training samples, the
// surrogate bank with its coefficient frame, and the adaptation counters.
// Values are written with round-trip precision; the basis factorization is
// replayed on load, which reproduces the online construction bit for bit.
inline void save_checkpoint(const std::string& path, const HierarchyState& state) {
  auto out = detail::open_out(path);
  const Eigen::Index p = state.basis.provenance.empty() ? 0 : state.basis.provenance.front().size();
  out << "lqhier-checkpoint 1\n";
  out << "basis " << state.basis.dim() << ' ' << state.basis.size() << ' ' << p << '\n';
  for (int i = 0; i < state.basis.size(); ++i) {
    detail::write_vector(out, state.basis.provenance[i]);
    detail::write_vector(out, state.basis.vectors[i]);
  }
  out << "samples " << state.samples.size() << '\n';
  for (const auto& s : state.samples) {
    out << s.parameter.size() << ' ' << s.alpha.size() << '\n';
    detail::write_vector(out, s.parameter);
    detail::write_vector(out, s.alpha);
  }
  out << "counters " << state.pending_samples << ' ' << state.rejected_snapshots << '\n';
  out << "model " << state.model.surrogates.size() << ' ' << state.model.frame.rows() << '\n';
  if (state.model.frame.size() > 0)
    for (Eigen::Index i = 0; i < state.model.frame.rows(); ++i)
      detail::write_vector(out, state.model.frame.row(i));
  for (const auto& s : state.model.surrogates) {
    out << "surrogate " << s.centers.size() << ' ' << s.trained_on << ' ' << s.skipped_points
        << ' ' << s.shape << '\n';
    out << "box " << s.box.lo.size() << '\n';
    if (s.box.lo.size() > 0) {
      detail::write_vector(out, s.box.lo);
      detail::write_vector(out, s.box.hi);
    }
    for (size_t j = 0; j < s.centers.size(); ++j) {
      out << s.centers[j].size();
      detail::write_vector(out, s.centers[j]);
    }
    if (!s.centers.empty()) detail::write_vector(out, s.weights);
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

inline HierarchyState load_checkpoint(const std::string& path) {
  auto in = detail::open_in(path);
  detail::expect_token(in, "lqhier-checkpoint", path);
  int version = 0;
  if (!(in >> version) || version != 1)
    throw std::runtime_error("unsupported checkpoint version in " + path);

  HierarchyState state;
  detail::expect_token(in, "basis", path);
  Eigen::Index n = 0, p = 0;
  int N = 0;
  if (!(in >> n >> N >> p)) throw std::runtime_error("malformed checkpoint " + path);
  for (int i = 0; i < N; ++i) {
    const Parameter mu = detail::read_vector(in, p, "checkpoint " + path);
    const Vector v = detail::read_vector(in, n, "checkpoint " + path);
    if (extend_basis(state.basis, v, mu) != ExtendOutcome::appended)
      throw std::runtime_error("checkpoint " + path + " contains dependent basis columns");
  }

  detail::expect_token(in, "samples", path);
  size_t sample_count = 0;
  if (!(in >> sample_count)) throw std::runtime_error("malformed checkpoint " + path);
  state.samples.resize(sample_count);
  for (auto& s : state.samples) {
    Eigen::Index pdim = 0, adim = 0;
    if (!(in >> pdim >> adim)) throw std::runtime_error("malformed checkpoint " + path);
    s.parameter = detail::read_vector(in, pdim, "checkpoint " + path);
    s.alpha = detail::read_vector(in, adim, "checkpoint " + path);
  }

  detail::expect_token(in, "counters", path);
  if (!(in >> state.pending_samples >> state.rejected_snapshots))
    throw std::runtime_error("malformed checkpoint " + path);

  detail::expect_token(in, "model", path);
  size_t surrogate_count = 0;
  Eigen::Index frame_rows = 0;
  if (!(in >> surrogate_count >> frame_rows))
    throw std::runtime_error("malformed checkpoint " + path);
  if (frame_rows > 0) {
    state.model.frame.resize(frame_rows, frame_rows);
    for (Eigen::Index i = 0; i < frame_rows; ++i)
      state.model.frame.row(i) = detail::read_vector(in, frame_rows, "checkpoint " + path);
  }
  state.model.surrogates.resize(surrogate_count);
  for (auto& s : state.model.surrogates) {
    detail::expect_token(in, "surrogate", path);
    size_t centers = 0;
    if (!(in >> centers >> s.trained_on >> s.skipped_points >> s.shape))
      throw std::runtime_error("malformed checkpoint " + path);
    detail::expect_token(in, "box", path);
    Eigen::Index box_dim = 0;
    if (!(in >> box_dim)) throw std::runtime_error("malformed checkpoint " + path);
    if (box_dim > 0) {
      s.box.lo = detail::read_vector(in, box_dim, "checkpoint " + path);
      s.box.hi = detail::read_vector(in, box_dim, "checkpoint " + path);
    }
    s.centers.resize(centers);
    for (auto& c : s.centers) {
      Eigen::Index cdim = 0;
      if (!(in >> cdim)) throw std::runtime_error("malformed checkpoint " + path);
      c = detail::read_vector(in, cdim, "checkpoint " + path);
    }
    if (centers > 0) s.weights = detail::read_vector(in, centers, "checkpoint " + path);
  }
  return state;
}

}  // namespace lqhier

#endif
