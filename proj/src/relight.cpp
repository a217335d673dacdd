#include "lidas/relight.hpp"

#include "lidas/kernels.hpp"

namespace lidas {

Image relight(const ScenePair& pair, const LightField& m) {
  require_same_shape(pair, m, "relight");
  const kernels::Dims d{pair.height(), pair.width(), pair.channels()};
  std::vector<float> out(pair.i_full.data().size());
  kernels::parallel::relight(pair.i_full.data(), pair.i_off.data(), m.data(), d, out);
  return Image::adopt(d.height, d.width, d.channels, std::move(out));
}

FieldGradient relight_gradient(const ScenePair& pair, const ImageGradient& upstream) {
  if (!pair.i_full.same_shape(pair.i_off)) {
    throw ShapeError("relight_gradient: i_full and i_off dimensions differ");
  }
  if (upstream.height != pair.height() || upstream.width != pair.width() ||
      upstream.channels != pair.channels()) {
    throw ShapeError("relight_gradient: upstream gradient shape does not match scene");
  }
  const kernels::Dims d{pair.height(), pair.width(), pair.channels()};
  FieldGradient out(d.height, d.width, 1);
  kernels::parallel::relight_gradient(pair.i_full.data(), pair.i_off.data(), upstream.data, d,
                                      out.data);
  return out;
}

DarkenResult darken_only(const Image& i_lb, const LightField& m_lb, const LightField& m) {
  if (!m_lb.same_shape(i_lb) || !m.same_shape(i_lb)) {
    throw ShapeError("darken_only: image and fields must share dimensions");
  }
  const kernels::Dims d{i_lb.height(), i_lb.width(), i_lb.channels()};
  std::vector<float> field(d.pixels());
  std::vector<float> image(i_lb.data().size());
  kernels::parallel::darken_only(i_lb.data(), m_lb.data(), m.data(), d, field, image);
  return {Image::adopt(d.height, d.width, d.channels, std::move(image)),
          LightField::adopt(d.height, d.width, std::move(field))};
}

}  // namespace lidas
