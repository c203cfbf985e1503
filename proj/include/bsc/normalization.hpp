#pragma once

#include <string>
#include <string_view>

#include "bsc/matrix.hpp"

namespace bsc {

// Embedding normalization applied before the similarity product.
//   RowL2      - every row scaled to unit L2 norm (dot becomes cosine)
//   CoordL2    - every column scaled to unit L2 norm (batch-axis)
//   CoordMinmax- every column affinely mapped to [0, 1] (batch-axis)
enum class NormalizationMode { None, RowL2, CoordL2, CoordMinmax };

NormalizationMode parse_normalization_mode(std::string_view name);
std::string normalization_mode_name(NormalizationMode mode);

Matrix normalize(const Matrix& m, NormalizationMode mode);

// Chain rule through normalize: given dL/d(normalize(m)), returns dL/dm.
// Min/max positions are treated as fixed (subgradient at the selected
// extremes); a constant column has zero gradient.
Matrix normalize_backward(const Matrix& m, NormalizationMode mode,
                          const Matrix& upstream_grad);

}  // namespace bsc
