#pragma once

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mmse/distributions.hpp"
#include "mmse/linalg.hpp"
#include "mmse/util.hpp"

namespace mmse {

// h(x) = sigmoid(a.x + b)
struct Logistic {
    Vec a;
    double b = 0.0;
};

// h(x) = sigmoid(w2 . relu(W1 x + b1) + b2), one hidden layer of width d_w
struct ShallowNet {
    Mat w1;   // d_w x d
    Vec b1;   // d_w
    Vec w2;   // d_w
    double b2 = 0.0;

    std::size_t width() const { return b1.size(); }
    std::size_t in_dim() const { return w1.cols(); }
};

using Hypothesis = std::variant<Logistic, ShallowNet>;

enum class HypothesisClass { logistic, shallow_net };

inline std::string to_string(HypothesisClass c) {
    return c == HypothesisClass::logistic ? "logistic" : "shallow_net";
}

inline double predict(const Logistic& h, std::span<const double> x) {
    if (x.size() != h.a.size()) throw std::invalid_argument("predict: dimension mismatch");
    return sigmoid(dot(h.a, x) + h.b);
}

inline double predict(const ShallowNet& h, std::span<const double> x) {
    if (x.size() != h.in_dim()) throw std::invalid_argument("predict: dimension mismatch");
    double z = h.b2;
    for (std::size_t k = 0; k < h.width(); ++k) {
        double a = h.b1[k];
        for (std::size_t j = 0; j < x.size(); ++j) a += h.w1(k, j) * x[j];
        if (a > 0.0) z += h.w2[k] * a;
    }
    return sigmoid(z);
}

inline double predict(const Hypothesis& h, std::span<const double> x) {
    return std::visit([&](const auto& m) { return predict(m, x); }, h);
}

// Empirical mean-squared error of h over a dataset.
inline double emp_mse(const Hypothesis& h, const NoisyDataset& ds) {
    if (ds.size() == 0) throw std::invalid_argument("emp_mse: empty dataset");
    double s = 0.0;
    std::visit(
        [&](const auto& m) {
            for (std::size_t i = 0; i < ds.size(); ++i) {
                const double r = ds.ss[i] - predict(m, ds.xs.row(i));
                s += r * r;
            }
        },
        h);
    return s / static_cast<double>(ds.size());
}

// Per-sample squared residuals W_i = (S_i - h(X_i))^2, the input of the
// empirical Bernstein bound.
inline Vec squared_residuals(const Hypothesis& h, const NoisyDataset& ds) {
    Vec w(ds.size());
    std::visit(
        [&](const auto& m) {
            for (std::size_t i = 0; i < ds.size(); ++i) {
                const double r = ds.ss[i] - predict(m, ds.xs.row(i));
                w[i] = r * r;
            }
        },
        h);
    return w;
}

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
}

}  // namespace detail

// Canonical weight format: magic "MMSEH1", variant tag byte (0 = logistic,
// 1 = shallow net), u32 header (d, d_w; d_w = 0 for logistic), then row-major
// little-endian 64-bit floats.
inline std::vector<std::uint8_t> serialize_weights(const Hypothesis& h) {
    std::vector<std::uint8_t> out;
    const char magic[6] = {'M', 'M', 'S', 'E', 'H', '1'};
    out.insert(out.end(), magic, magic + 6);
    if (const auto* lg = std::get_if<Logistic>(&h)) {
        out.push_back(0);
        detail::put_u32(out, static_cast<std::uint32_t>(lg->a.size()));
        detail::put_u32(out, 0);
        for (double v : lg->a) detail::put_f64(out, v);
        detail::put_f64(out, lg->b);
    } else {
        const auto& net = std::get<ShallowNet>(h);
        out.push_back(1);
        detail::put_u32(out, static_cast<std::uint32_t>(net.in_dim()));
        detail::put_u32(out, static_cast<std::uint32_t>(net.width()));
        for (double v : net.w1.data()) detail::put_f64(out, v);
        for (double v : net.b1) detail::put_f64(out, v);
        for (double v : net.w2) detail::put_f64(out, v);
        detail::put_f64(out, net.b2);
    }
    return out;
}

// Raw DEFLATE at maximum compression.
inline std::vector<std::uint8_t> deflate_bytes(std::span<const std::uint8_t> in) {
    z_stream zs{};
    if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, -15, 9,
                     Z_DEFAULT_STRATEGY) != Z_OK)
        throw numerical_error("deflate: init failed");
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())));
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw numerical_error("deflate: compression failed");
    out.resize(out.size() - zs.avail_out);
    return out;
}

// C(h): bits needed to represent h, measured as 8x the length of the
// losslessly compressed canonical weight string.
inline std::size_t compressed_size_bits(const Hypothesis& h) {
    const auto raw = serialize_weights(h);
    return 8 * deflate_bytes(raw).size();
}

}  // namespace mmse
