// Times the OpenMP kernels against their serial references on
// representative shapes and checks that both produce identical bytes.

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "ga/kernels.hpp"
#include "ga/rng.hpp"

using clock_type = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto t0 = clock_type::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = clock_type::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms, bool match) {
    std::printf("%-24s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx   %s\n",
                name, serial_ms, parallel_ms, serial_ms / parallel_ms,
                match ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
    ga::rng::Rng rng(42);
    namespace k = ga::kernels;

    {
        const int iw = 576, ih = 432, ow = 640, oh = 480;
        std::vector<float> in(static_cast<std::size_t>(iw) * ih);
        for (auto& v : in) v = static_cast<float>(rng.next_double());
        std::vector<float> out_s(static_cast<std::size_t>(ow) * oh), out_p = out_s;
        const double ts = time_ms([&] { k::bilinear_resize_serial(in.data(), iw, ih, out_s.data(), ow, oh); }, 20);
        const double tp = time_ms([&] { k::bilinear_resize(in.data(), iw, ih, out_p.data(), ow, oh); }, 20);
        report("bilinear_resize", ts, tp, out_s == out_p);
    }

    const int cin = 16, cout = 32, ih = 96, iw = 128, stride = 2;
    const int oh = k::conv_out_dim(ih, stride), ow = k::conv_out_dim(iw, stride);
    std::vector<float> in(static_cast<std::size_t>(cin) * ih * iw);
    std::vector<float> w(static_cast<std::size_t>(cout) * cin * 9);
    std::vector<float> b(cout);
    for (auto& v : in) v = static_cast<float>(rng.next_double());
    for (auto& v : w) v = static_cast<float>(rng.normal(0.0, 0.1));
    for (auto& v : b) v = static_cast<float>(rng.normal(0.0, 0.1));
    std::vector<float> out_s(static_cast<std::size_t>(cout) * oh * ow), out_p = out_s;

    {
        const double ts = time_ms([&] { k::conv2d_forward_serial(in.data(), cin, ih, iw, w.data(), b.data(), cout, stride, out_s.data()); }, 10);
        const double tp = time_ms([&] { k::conv2d_forward(in.data(), cin, ih, iw, w.data(), b.data(), cout, stride, out_p.data()); }, 10);
        report("conv2d_forward", ts, tp, out_s == out_p);
    }
    {
        std::vector<float> dw_s(w.size()), db_s(b.size()), dw_p(w.size()), db_p(b.size());
        const double ts = time_ms([&] {
            std::fill(dw_s.begin(), dw_s.end(), 0.0f);
            std::fill(db_s.begin(), db_s.end(), 0.0f);
            k::conv2d_backward_weights_serial(in.data(), cin, ih, iw, out_s.data(), cout, stride, dw_s.data(), db_s.data());
        }, 10);
        const double tp = time_ms([&] {
            std::fill(dw_p.begin(), dw_p.end(), 0.0f);
            std::fill(db_p.begin(), db_p.end(), 0.0f);
            k::conv2d_backward_weights(in.data(), cin, ih, iw, out_s.data(), cout, stride, dw_p.data(), db_p.data());
        }, 10);
        report("conv2d_backward_w", ts, tp, dw_s == dw_p && db_s == db_p);
    }
    {
        std::vector<float> din_s(in.size()), din_p(in.size());
        const double ts = time_ms([&] { k::conv2d_backward_input_serial(w.data(), cin, ih, iw, out_s.data(), cout, stride, din_s.data()); }, 10);
        const double tp = time_ms([&] { k::conv2d_backward_input(w.data(), cin, ih, iw, out_s.data(), cout, stride, din_p.data()); }, 10);
        report("conv2d_backward_in", ts, tp, din_s == din_p);
    }
    return 0;
}
