#include "ga/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ga::kernels {

namespace {

std::atomic<bool> g_parallel{true};

// Parallel dispatch only at the outermost level; nested regions (e.g. a
// kernel called from an already-parallel batch loop) run serially.
bool use_parallel() {
#ifdef _OPENMP
    return g_parallel.load(std::memory_order_relaxed) && omp_get_level() == 0;
#else
    return false;
#endif
}

inline void resize_row(const float* in, int iw, int ih, float* out, int ow,
                       int oh, int y) {
    const double sy = static_cast<double>(ih) / oh;
    const double sx = static_cast<double>(iw) / ow;
    const double fy = (y + 0.5) * sy - 0.5;
    const double cy = std::clamp(fy, 0.0, static_cast<double>(ih - 1));
    const int y0 = static_cast<int>(cy);
    const int y1 = std::min(y0 + 1, ih - 1);
    const float wy = static_cast<float>(cy - y0);
    const float* row0 = in + static_cast<std::size_t>(y0) * iw;
    const float* row1 = in + static_cast<std::size_t>(y1) * iw;
    float* orow = out + static_cast<std::size_t>(y) * ow;
    for (int x = 0; x < ow; ++x) {
        const double fx = (x + 0.5) * sx - 0.5;
        const double cx = std::clamp(fx, 0.0, static_cast<double>(iw - 1));
        const int x0 = static_cast<int>(cx);
        const int x1 = std::min(x0 + 1, iw - 1);
        const float wx = static_cast<float>(cx - x0);
        const float top = row0[x0] + (row0[x1] - row0[x0]) * wx;
        const float bot = row1[x0] + (row1[x1] - row1[x0]) * wx;
        orow[x] = top + (bot - top) * wy;
    }
}

inline void conv_forward_channel(const float* in, int cin, int ih, int iw,
                                 const float* w, const float* b, int stride,
                                 float* out, int oh, int ow, int co) {
    float* oplane = out + static_cast<std::size_t>(co) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            float acc = b[co];
            const int iy0 = oy * stride - 1;
            const int ix0 = ox * stride - 1;
            for (int ci = 0; ci < cin; ++ci) {
                const float* iplane = in + static_cast<std::size_t>(ci) * ih * iw;
                const float* k = w + ((static_cast<std::size_t>(co) * cin + ci) * 9);
                for (int ky = 0; ky < 3; ++ky) {
                    const int iy = iy0 + ky;
                    if (iy < 0 || iy >= ih) continue;
                    const float* irow = iplane + static_cast<std::size_t>(iy) * iw;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int ix = ix0 + kx;
                        if (ix < 0 || ix >= iw) continue;
                        acc += irow[ix] * k[ky * 3 + kx];
                    }
                }
            }
            oplane[oy * ow + ox] = acc;
        }
    }
}

inline void conv_backward_weights_channel(const float* in, int cin, int ih,
                                          int iw, const float* dout, int stride,
                                          float* dw, float* db, int oh, int ow,
                                          int co) {
    const float* dplane = dout + static_cast<std::size_t>(co) * oh * ow;
    double bsum = 0.0;
    for (int i = 0; i < oh * ow; ++i) bsum += dplane[i];
    db[co] += static_cast<float>(bsum);
    for (int ci = 0; ci < cin; ++ci) {
        const float* iplane = in + static_cast<std::size_t>(ci) * ih * iw;
        float* k = dw + ((static_cast<std::size_t>(co) * cin + ci) * 9);
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                float acc = 0.0f;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride - 1 + ky;
                    if (iy < 0 || iy >= ih) continue;
                    const float* irow = iplane + static_cast<std::size_t>(iy) * iw;
                    const float* drow = dplane + static_cast<std::size_t>(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride - 1 + kx;
                        if (ix < 0 || ix >= iw) continue;
                        acc += irow[ix] * drow[ox];
                    }
                }
                k[ky * 3 + kx] += acc;
            }
        }
    }
}

inline void conv_backward_input_channel(const float* w, int cin, int ih, int iw,
                                        const float* dout, int cout, int stride,
                                        float* din, int oh, int ow, int ci) {
    float* iplane = din + static_cast<std::size_t>(ci) * ih * iw;
    for (int y = 0; y < ih; ++y) {
        for (int x = 0; x < iw; ++x) {
            float acc = 0.0f;
            for (int co = 0; co < cout; ++co) {
                const float* dplane = dout + static_cast<std::size_t>(co) * oh * ow;
                const float* k = w + ((static_cast<std::size_t>(co) * cin + ci) * 9);
                for (int ky = 0; ky < 3; ++ky) {
                    const int num = y + 1 - ky;  // oy * stride
                    if (num < 0 || num % stride != 0) continue;
                    const int oy = num / stride;
                    if (oy >= oh) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int numx = x + 1 - kx;
                        if (numx < 0 || numx % stride != 0) continue;
                        const int ox = numx / stride;
                        if (ox >= ow) continue;
                        acc += dplane[oy * ow + ox] * k[ky * 3 + kx];
                    }
                }
            }
            iplane[y * iw + x] = acc;
        }
    }
}

}  // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

void bilinear_resize_serial(const float* in, int iw, int ih, float* out, int ow,
                            int oh) {
    for (int y = 0; y < oh; ++y) resize_row(in, iw, ih, out, ow, oh, y);
}

void bilinear_resize(const float* in, int iw, int ih, float* out, int ow,
                     int oh) {
    if (!use_parallel()) {
        bilinear_resize_serial(in, iw, ih, out, ow, oh);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (int y = 0; y < oh; ++y) resize_row(in, iw, ih, out, ow, oh, y);
#endif
}

void conv2d_forward_serial(const float* in, int cin, int ih, int iw,
                           const float* w, const float* b, int cout, int stride,
                           float* out) {
    const int oh = conv_out_dim(ih, stride);
    const int ow = conv_out_dim(iw, stride);
    for (int co = 0; co < cout; ++co)
        conv_forward_channel(in, cin, ih, iw, w, b, stride, out, oh, ow, co);
}

void conv2d_forward(const float* in, int cin, int ih, int iw, const float* w,
                    const float* b, int cout, int stride, float* out) {
    if (!use_parallel()) {
        conv2d_forward_serial(in, cin, ih, iw, w, b, cout, stride, out);
        return;
    }
#ifdef _OPENMP
    const int oh = conv_out_dim(ih, stride);
    const int ow = conv_out_dim(iw, stride);
#pragma omp parallel for schedule(static)
    for (int co = 0; co < cout; ++co)
        conv_forward_channel(in, cin, ih, iw, w, b, stride, out, oh, ow, co);
#endif
}

void conv2d_backward_weights_serial(const float* in, int cin, int ih, int iw,
                                    const float* dout, int cout, int stride,
                                    float* dw, float* db) {
    const int oh = conv_out_dim(ih, stride);
    const int ow = conv_out_dim(iw, stride);
    for (int co = 0; co < cout; ++co)
        conv_backward_weights_channel(in, cin, ih, iw, dout, stride, dw, db, oh,
                                      ow, co);
}

void conv2d_backward_weights(const float* in, int cin, int ih, int iw,
                             const float* dout, int cout, int stride, float* dw,
                             float* db) {
    if (!use_parallel()) {
        conv2d_backward_weights_serial(in, cin, ih, iw, dout, cout, stride, dw, db);
        return;
    }
#ifdef _OPENMP
    const int oh = conv_out_dim(ih, stride);
    const int ow = conv_out_dim(iw, stride);
#pragma omp parallel for schedule(static)
    for (int co = 0; co < cout; ++co)
        conv_backward_weights_channel(in, cin, ih, iw, dout, stride, dw, db, oh,
                                      ow, co);
#endif
}

void conv2d_backward_input_serial(const float* w, int cin, int ih, int iw,
                                  const float* dout, int cout, int stride,
                                  float* din) {
    const int oh = conv_out_dim(ih, stride);
    const int ow = conv_out_dim(iw, stride);
    for (int ci = 0; ci < cin; ++ci)
        conv_backward_input_channel(w, cin, ih, iw, dout, cout, stride, din, oh,
                                    ow, ci);
}

void conv2d_backward_input(const float* w, int cin, int ih, int iw,
                           const float* dout, int cout, int stride, float* din) {
    if (!use_parallel()) {
        conv2d_backward_input_serial(w, cin, ih, iw, dout, cout, stride, din);
        return;
    }
#ifdef _OPENMP
    const int oh = conv_out_dim(ih, stride);
    const int ow = conv_out_dim(iw, stride);
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < cin; ++ci)
        conv_backward_input_channel(w, cin, ih, iw, dout, cout, stride, din, oh,
                                    ow, ci);
#endif
}

}  // namespace ga::kernels
