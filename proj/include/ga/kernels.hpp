#pragma once

// Dense inner loops shared by the imaging and estimator modules: bilinear
// resize plus 3x3 convolution forward/backward. Each kernel has a serial
// reference implementation and an OpenMP variant. The parallel variants
// partition work so that every output element is written by exactly one
// thread using the same inner summation order as the serial code, so
// results are bit-identical for any thread count. Tests compare the two
// paths and tools/bench_kernels times them.

#include <cstddef>

namespace ga::kernels {

// Process-wide switch; parallel by default when built with OpenMP.
bool parallel_enabled();
void set_parallel(bool on);

// Output size of a 3x3 convolution with pad 1.
inline int conv_out_dim(int in, int stride) { return (in + 2 - 3) / stride + 1; }

// Resize a single-channel image. Pixel centers are aligned:
// in_x = (out_x + 0.5) * iw / ow - 0.5, clamped to the border, so an
// identity-size resize copies the input exactly.
void bilinear_resize(const float* in, int iw, int ih, float* out, int ow, int oh);
void bilinear_resize_serial(const float* in, int iw, int ih, float* out, int ow, int oh);

// 3x3 convolution, pad 1, configurable stride. Layout: CHW contiguous,
// weights [cout][cin][3][3], bias [cout].
void conv2d_forward(const float* in, int cin, int ih, int iw,
                    const float* w, const float* b, int cout, int stride,
                    float* out);
void conv2d_forward_serial(const float* in, int cin, int ih, int iw,
                           const float* w, const float* b, int cout, int stride,
                           float* out);

// Gradients w.r.t. weights and bias; accumulates into dw/db (caller zeroes).
void conv2d_backward_weights(const float* in, int cin, int ih, int iw,
                             const float* dout, int cout, int stride,
                             float* dw, float* db);
void conv2d_backward_weights_serial(const float* in, int cin, int ih, int iw,
                                    const float* dout, int cout, int stride,
                                    float* dw, float* db);

// Gradient w.r.t. the input, gather form (one writer per input pixel).
void conv2d_backward_input(const float* w, int cin, int ih, int iw,
                           const float* dout, int cout, int stride,
                           float* din);
void conv2d_backward_input_serial(const float* w, int cin, int ih, int iw,
                                  const float* dout, int cout, int stride,
                                  float* din);

}  // namespace ga::kernels
