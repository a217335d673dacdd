#pragma once

#include "lidas/image.hpp"

namespace lidas {

/// I = I_full * M + I_off * (1 - M), per pixel and channel.
Image relight(const ScenePair& pair, const LightField& m);

/// Backward pass of relight: dL/dM[p] = sum_c upstream[p,c] * (I_full - I_off)[p,c].
FieldGradient relight_gradient(const ScenePair& pair, const ImageGradient& upstream);

struct DarkenResult {
  Image image;
  LightField field;  // M' = 1 - max(M_LB - M, 0)
};

/// Darken-only relighting of a captured low-beam image: light can be removed
/// where the requested field is below the low-beam field, never added.
DarkenResult darken_only(const Image& i_lb, const LightField& m_lb, const LightField& m);

}  // namespace lidas
