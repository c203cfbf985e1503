#include "bsc/normalization.hpp"

#include <cmath>
#include <string>

#include "bsc/errors.hpp"

namespace bsc {

NormalizationMode parse_normalization_mode(std::string_view name) {
  if (name == "none") return NormalizationMode::None;
  if (name == "row_l2") return NormalizationMode::RowL2;
  if (name == "coord_l2") return NormalizationMode::CoordL2;
  if (name == "coord_minmax") return NormalizationMode::CoordMinmax;
  throw ValidationError("unknown normalization mode: " + std::string(name));
}

std::string normalization_mode_name(NormalizationMode mode) {
  switch (mode) {
    case NormalizationMode::None: return "none";
    case NormalizationMode::RowL2: return "row_l2";
    case NormalizationMode::CoordL2: return "coord_l2";
    case NormalizationMode::CoordMinmax: return "coord_minmax";
  }
  return "none";
}

namespace {

double row_norm(const Matrix& m, std::size_t i) {
  double s = 0.0;
  for (std::size_t c = 0; c < m.cols(); ++c) s += m(i, c) * m(i, c);
  return std::sqrt(s);
}

double col_norm(const Matrix& m, std::size_t c) {
  double s = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) s += m(r, c) * m(r, c);
  return std::sqrt(s);
}

}  // namespace

Matrix normalize(const Matrix& m, NormalizationMode mode) {
  if (m.rows() == 0 || m.cols() == 0) throw DomainError("normalize: empty matrix");
  switch (mode) {
    case NormalizationMode::None:
      return m;
    case NormalizationMode::RowL2: {
      Matrix out(m.rows(), m.cols());
      for (std::size_t i = 0; i < m.rows(); ++i) {
        double n = row_norm(m, i);
        if (n == 0.0)
          throw DomainError("normalize(row_l2): all-zero row " + std::to_string(i));
        for (std::size_t c = 0; c < m.cols(); ++c) out(i, c) = m(i, c) / n;
      }
      return out;
    }
    case NormalizationMode::CoordL2: {
      Matrix out(m.rows(), m.cols());
      for (std::size_t c = 0; c < m.cols(); ++c) {
        double n = col_norm(m, c);
        if (n == 0.0)
          throw DomainError("normalize(coord_l2): all-zero column " + std::to_string(c));
        for (std::size_t r = 0; r < m.rows(); ++r) out(r, c) = m(r, c) / n;
      }
      return out;
    }
    case NormalizationMode::CoordMinmax: {
      Matrix out(m.rows(), m.cols());
      for (std::size_t c = 0; c < m.cols(); ++c) {
        double lo = m(0, c), hi = m(0, c);
        for (std::size_t r = 1; r < m.rows(); ++r) {
          lo = std::min(lo, m(r, c));
          hi = std::max(hi, m(r, c));
        }
        double range = hi - lo;
        for (std::size_t r = 0; r < m.rows(); ++r) {
          // Constant column maps to the interval midpoint.
          out(r, c) = range == 0.0 ? 0.5 : (m(r, c) - lo) / range;
        }
      }
      return out;
    }
  }
  throw ContractError("normalize: unreachable mode");
}

Matrix normalize_backward(const Matrix& m, NormalizationMode mode,
                          const Matrix& upstream_grad) {
  if (!m.same_shape(upstream_grad))
    throw ShapeError("normalize_backward: gradient shape mismatch");
  switch (mode) {
    case NormalizationMode::None:
      return upstream_grad;
    case NormalizationMode::RowL2: {
      // y = x / |x|, dx = (g - (g.y) y) / |x|: the radial component vanishes.
      Matrix out(m.rows(), m.cols());
      for (std::size_t i = 0; i < m.rows(); ++i) {
        double n = row_norm(m, i);
        if (n == 0.0)
          throw DomainError("normalize_backward(row_l2): all-zero row " + std::to_string(i));
        double g_dot_y = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c)
          g_dot_y += upstream_grad(i, c) * m(i, c) / n;
        for (std::size_t c = 0; c < m.cols(); ++c)
          out(i, c) = (upstream_grad(i, c) - g_dot_y * m(i, c) / n) / n;
      }
      return out;
    }
    case NormalizationMode::CoordL2: {
      Matrix out(m.rows(), m.cols());
      for (std::size_t c = 0; c < m.cols(); ++c) {
        double n = col_norm(m, c);
        if (n == 0.0)
          throw DomainError("normalize_backward(coord_l2): all-zero column " +
                            std::to_string(c));
        double g_dot_y = 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r)
          g_dot_y += upstream_grad(r, c) * m(r, c) / n;
        for (std::size_t r = 0; r < m.rows(); ++r)
          out(r, c) = (upstream_grad(r, c) - g_dot_y * m(r, c) / n) / n;
      }
      return out;
    }
    case NormalizationMode::CoordMinmax: {
      // y_k = (x_k - lo) / range with lo, hi pinned at the first extreme
      // index. dx_i = g_i/range - [i == argmin] sum(g)/range
      //               - ([i == argmax] - [i == argmin]) sum(g y)/range.
      Matrix out(m.rows(), m.cols());
      for (std::size_t c = 0; c < m.cols(); ++c) {
        std::size_t imin = 0, imax = 0;
        for (std::size_t r = 1; r < m.rows(); ++r) {
          if (m(r, c) < m(imin, c)) imin = r;
          if (m(r, c) > m(imax, c)) imax = r;
        }
        double range = m(imax, c) - m(imin, c);
        if (range == 0.0) {
          for (std::size_t r = 0; r < m.rows(); ++r) out(r, c) = 0.0;
          continue;
        }
        double sum_g = 0.0, sum_gy = 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) {
          double y = (m(r, c) - m(imin, c)) / range;
          sum_g += upstream_grad(r, c);
          sum_gy += upstream_grad(r, c) * y;
        }
        for (std::size_t r = 0; r < m.rows(); ++r) {
          double g = upstream_grad(r, c);
          double d = g / range;
          if (r == imin) d -= (sum_g - sum_gy) / range;
          if (r == imax) d -= sum_gy / range;
          out(r, c) = d;
        }
      }
      return out;
    }
  }
  throw ContractError("normalize_backward: unreachable mode");
}

}  // namespace bsc
