#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "diffcls/errors.hpp"
#include "diffcls/rng.hpp"

namespace diffcls {

// Class-conditional synthetic glyphs: face-like arrangements of a mouth
// curve, two brows and two eyes on a blank field. Pixel storage is [0,1].
struct GlyphDataset {
    int height = 0, width = 0, channels = 0, num_classes = 0;
    std::vector<float> pixels; // N * H * W * C
    std::vector<std::uint16_t> labels;
    std::vector<std::string> class_names;
    std::string split;

    std::size_t size() const { return labels.size(); }
    std::size_t image_dim() const {
        return static_cast<std::size_t>(height) * width * channels;
    }
    std::span<const float> image(std::size_t i) const {
        return {pixels.data() + i * image_dim(), image_dim()};
    }
    int label(std::size_t i) const { return labels[i]; }

    void validate() const {
        if (pixels.size() != size() * image_dim())
            throw FormatError("dataset: pixel buffer size mismatch");
        for (auto l : labels)
            if (l >= num_classes) throw FormatError("dataset: label out of range");
        for (float p : pixels)
            if (!(p >= 0.0f && p <= 1.0f)) throw FormatError("dataset: pixel outside [0,1]");
    }
};

// Continuous template parameters for one glyph class. All lengths are
// fractions of the image size.
struct GlyphParams {
    double mouth_curve = 0.0; // sign picks smile vs frown
    double mouth_y = 0.70;
    double mouth_halfwidth = 0.28;
    double eye_dx = 0.22;
    double eye_y = 0.34;
    double eye_radius = 0.055;
    double brow_tilt = 0.0;
    double brow_y = 0.20;
};

namespace detail {

// Class identity lives on a 4 x 2 x 2 lattice (mouth curvature level, brow
// tilt sign, eye size), which keeps up to 16 classes pairwise separable.
inline GlyphParams class_params(int k) {
    static constexpr std::array<double, 4> curve_levels = {-0.8, -0.3, 0.3, 0.8};
    GlyphParams p;
    p.mouth_curve = curve_levels[static_cast<std::size_t>(k % 4)];
    p.brow_tilt = ((k / 4) % 2 == 0) ? -0.5 : 0.5;
    p.eye_radius = ((k / 8) % 2 == 0) ? 0.050 : 0.085;
    return p;
}

// Jitter scales per parameter: at jitter=1 a parameter moves by at most this
// amount, well under half the lattice spacing for the class-bearing axes.
inline GlyphParams jitter_params(const GlyphParams& base, double jitter, Rng& rng) {
    GlyphParams p = base;
    p.mouth_curve += jitter * 0.18 * rng.uniform(-1.0, 1.0);
    p.mouth_y += jitter * 0.02 * rng.uniform(-1.0, 1.0);
    p.mouth_halfwidth += jitter * 0.03 * rng.uniform(-1.0, 1.0);
    p.eye_dx += jitter * 0.02 * rng.uniform(-1.0, 1.0);
    p.eye_y += jitter * 0.02 * rng.uniform(-1.0, 1.0);
    p.eye_radius += jitter * 0.012 * rng.uniform(-1.0, 1.0);
    p.brow_tilt += jitter * 0.30 * rng.uniform(-1.0, 1.0);
    p.brow_y += jitter * 0.02 * rng.uniform(-1.0, 1.0);
    return p;
}

inline void render_glyph(const GlyphParams& p, int H, int W, float* out) {
    struct Blob {
        double x, y, r;
    };
    std::vector<Blob> blobs;
    blobs.reserve(64);

    // Mouth: soft stroke along a parabola; curve > 0 bows the center down
    // relative to the corners (a smile).
    constexpr int mouth_samples = 25;
    constexpr double stroke = 0.035;
    for (int i = 0; i < mouth_samples; ++i) {
        const double u = -1.0 + 2.0 * i / (mouth_samples - 1);
        blobs.push_back({0.5 + u * p.mouth_halfwidth,
                         p.mouth_y + p.mouth_curve * 0.12 * (u * u - 0.5), stroke});
    }
    // Eyes.
    blobs.push_back({0.5 - p.eye_dx, p.eye_y, p.eye_radius});
    blobs.push_back({0.5 + p.eye_dx, p.eye_y, p.eye_radius});
    // Brows: short strokes above the eyes, mirrored tilt.
    constexpr int brow_samples = 9;
    constexpr double brow_halfwidth = 0.10;
    for (int side = -1; side <= 1; side += 2) {
        const double bx = 0.5 + side * p.eye_dx;
        for (int i = 0; i < brow_samples; ++i) {
            const double u = -1.0 + 2.0 * i / (brow_samples - 1);
            blobs.push_back({bx + u * brow_halfwidth,
                             p.brow_y - side * u * p.brow_tilt * 0.08, stroke});
        }
    }

    for (int r = 0; r < H; ++r) {
        const double py = (r + 0.5) / H;
        for (int c = 0; c < W; ++c) {
            const double px = (c + 0.5) / W;
            double v = 0.0;
            for (const Blob& b : blobs) {
                const double dx = px - b.x, dy = py - b.y;
                const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * b.r * b.r));
                v = std::max(v, g);
            }
            out[r * W + c] = static_cast<float>(std::min(v, 1.0));
        }
    }
}

} // namespace detail

// Renders the noiseless template for class k (used by nearest-template
// baselines and as the jitter=0 sample).
inline std::vector<float> render_class_template(int k, int H, int W) {
    std::vector<float> img(static_cast<std::size_t>(H) * W);
    detail::render_glyph(detail::class_params(k), H, W, img.data());
    return img;
}

inline GlyphDataset gen_synthetic(int K, int per_class, int H, int W, double jitter,
                                  std::uint64_t seed) {
    if (K < 2 || K > 16) throw ConfigError("gen_synthetic: K must be in 2..16");
    if (H < 8 || W < 8) throw ConfigError("gen_synthetic: H and W must be >= 8");
    if (per_class < 1) throw ConfigError("gen_synthetic: per_class must be >= 1");
    if (jitter < 0.0 || jitter > 1.0) throw ConfigError("gen_synthetic: jitter must be in [0,1]");

    GlyphDataset ds;
    ds.height = H;
    ds.width = W;
    ds.channels = 1;
    ds.num_classes = K;
    const std::size_t n = static_cast<std::size_t>(K) * per_class;
    ds.pixels.resize(n * ds.image_dim());
    ds.labels.resize(n);
    for (int k = 0; k < K; ++k) ds.class_names.push_back("glyph_" + std::to_string(k));

    Rng rng(mix_seed(seed, seed_tag::glyph));
    std::size_t idx = 0;
    for (int k = 0; k < K; ++k) {
        const GlyphParams base = detail::class_params(k);
        for (int i = 0; i < per_class; ++i, ++idx) {
            const GlyphParams p = detail::jitter_params(base, jitter, rng);
            float* img = ds.pixels.data() + idx * ds.image_dim();
            detail::render_glyph(p, H, W, img);
            if (jitter > 0.0) {
                const double sigma = 0.05 * jitter;
                for (std::size_t j = 0; j < ds.image_dim(); ++j) {
                    const double v = img[j] + sigma * rng.normal();
                    img[j] = static_cast<float>(std::clamp(v, 0.0, 1.0));
                }
            }
            ds.labels[idx] = static_cast<std::uint16_t>(k);
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Corruption operators for the robustness protocol.

struct CorruptionSpec {
    enum class Kind { GaussianNoise, GaussianBlur };
    Kind kind = Kind::GaussianNoise;
    double sigma = 10.0;  // noise: on the 0..255 scale; blur: in pixels
    int kernel_size = 15; // blur only, odd and >= 3
    std::uint64_t seed = 0; // noise only

    void validate() const {
        if (!(sigma > 0.0)) throw ArgumentError("corruption: sigma must be > 0");
        if (kind == Kind::GaussianBlur && (kernel_size < 3 || kernel_size % 2 == 0))
            throw ArgumentError("corruption: blur kernel size must be odd and >= 3");
    }

    std::string label() const {
        if (kind == Kind::GaussianNoise) return "noise_sigma=" + format_sigma();
        return "blur_k" + std::to_string(kernel_size) + "_sigma=" + format_sigma();
    }

private:
    std::string format_sigma() const {
        std::string s = std::to_string(sigma);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    }
};

// Normalized 2-D Gaussian kernel, row-major size*size, weights summing to 1.
inline std::vector<double> gaussian_kernel(int size, double sigma) {
    if (size < 3 || size % 2 == 0) throw ArgumentError("gaussian_kernel: size must be odd >= 3");
    if (!(sigma > 0.0)) throw ArgumentError("gaussian_kernel: sigma must be > 0");
    std::vector<double> k(static_cast<std::size_t>(size) * size);
    const int r = size / 2;
    double sum = 0.0;
    for (int i = -r; i <= r; ++i)
        for (int j = -r; j <= r; ++j) {
            const double w = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
            k[static_cast<std::size_t>(i + r) * size + (j + r)] = w;
            sum += w;
        }
    for (double& w : k) w /= sum;
    return k;
}

namespace detail {

// Symmetric reflection: -1 -> 0, -2 -> 1, n -> n-1, n+1 -> n-2.
inline int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

} // namespace detail

// Applies the corruption to every image; output stays in [0,1] with the same
// shape. Noise is deterministic per (seed, sigma); blur is seed-free.
inline GlyphDataset corrupt(const GlyphDataset& ds, const CorruptionSpec& spec) {
    spec.validate();
    GlyphDataset out = ds;
    if (spec.kind == CorruptionSpec::Kind::GaussianNoise) {
        Rng rng(mix_seed(mix_seed(spec.seed, seed_tag::corrupt),
                         static_cast<std::uint64_t>(spec.sigma * 1e6)));
        const double sd = spec.sigma / 255.0;
        for (float& p : out.pixels)
            p = static_cast<float>(std::clamp(p + sd * rng.normal(), 0.0, 1.0));
        return out;
    }

    const int r = spec.kernel_size / 2;
    if (r >= ds.height || r >= ds.width)
        throw ArgumentError("corruption: blur kernel radius exceeds image size");
    const std::vector<double> kernel = gaussian_kernel(spec.kernel_size, spec.sigma);
    const int H = ds.height, W = ds.width, C = ds.channels;
    for (std::size_t n = 0; n < ds.size(); ++n) {
        const float* src = ds.pixels.data() + n * ds.image_dim();
        float* dst = out.pixels.data() + n * ds.image_dim();
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                for (int c = 0; c < C; ++c) {
                    double acc = 0.0;
                    for (int i = -r; i <= r; ++i) {
                        const int sy = detail::reflect_index(y + i, H);
                        for (int j = -r; j <= r; ++j) {
                            const int sx = detail::reflect_index(x + j, W);
                            acc += kernel[static_cast<std::size_t>(i + r) * spec.kernel_size +
                                          (j + r)] *
                                   src[(sy * W + sx) * C + c];
                        }
                    }
                    dst[(y * W + x) * C + c] = static_cast<float>(std::clamp(acc, 0.0, 1.0));
                }
    }
    return out;
}

// ---------------------------------------------------------------------------
// ".dds" container: magic "DDS1", u32 LE version=1, u32 LE N,H,W,C,K,
// N*H*W*C float32 LE pixels, N u16 LE labels, K length-prefixed UTF-8 names.

namespace detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u16(std::string& buf, std::uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xFF));
    buf.push_back(static_cast<char>((v >> 8) & 0xFF));
}

inline void put_f32(std::string& buf, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

class ByteReader {
public:
    ByteReader(std::string data, std::string origin)
        : data_(std::move(data)), origin_(std::move(origin)) {}

    std::size_t offset() const { return pos_; }

    void need(std::size_t n, const char* what) const {
        if (pos_ + n > data_.size())
            throw format_error_at(origin_ + ": truncated file, expected " + std::to_string(n) +
                                      " more byte(s) for " + what + " but only " +
                                      std::to_string(data_.size() - pos_) + " remain",
                                  pos_);
    }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint16_t u16(const char* what) {
        need(2, what);
        const auto lo = static_cast<unsigned char>(data_[pos_]);
        const auto hi = static_cast<unsigned char>(data_[pos_ + 1]);
        pos_ += 2;
        return static_cast<std::uint16_t>(lo | (hi << 8));
    }

    float f32(const char* what) {
        const std::uint32_t bits = u32(what);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    std::string bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    void expect_exhausted() const {
        if (pos_ != data_.size())
            throw format_error_at(origin_ + ": " + std::to_string(data_.size() - pos_) +
                                      " unexpected trailing byte(s)",
                                  pos_);
    }

private:
    std::string data_;
    std::string origin_;
    std::size_t pos_ = 0;
};

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError(path + ": cannot open for reading");
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return data;
}

inline void write_file(const std::string& path, const std::string& data) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError(path + ": cannot open for writing");
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!f) throw FormatError(path + ": write failed");
}

} // namespace detail

inline void save_dataset(const GlyphDataset& ds, const std::string& path) {
    std::string buf;
    buf.reserve(24 + ds.pixels.size() * 4 + ds.labels.size() * 2);
    buf += "DDS1";
    detail::put_u32(buf, 1); // version
    detail::put_u32(buf, static_cast<std::uint32_t>(ds.size()));
    detail::put_u32(buf, static_cast<std::uint32_t>(ds.height));
    detail::put_u32(buf, static_cast<std::uint32_t>(ds.width));
    detail::put_u32(buf, static_cast<std::uint32_t>(ds.channels));
    detail::put_u32(buf, static_cast<std::uint32_t>(ds.num_classes));
    for (float p : ds.pixels) detail::put_f32(buf, p);
    for (std::uint16_t l : ds.labels) detail::put_u16(buf, l);
    for (const std::string& name : ds.class_names) {
        detail::put_u32(buf, static_cast<std::uint32_t>(name.size()));
        buf += name;
    }
    detail::write_file(path, buf);
}

inline GlyphDataset load_dataset(const std::string& path) {
    detail::ByteReader r(detail::read_file(path), path);
    if (r.bytes(4, "magic") != "DDS1")
        throw format_error_at(path + ": bad magic, expected \"DDS1\"", 0);
    const std::uint32_t version = r.u32("version");
    if (version != 1)
        throw format_error_at(path + ": unsupported version " + std::to_string(version), 4);

    GlyphDataset ds;
    const std::uint32_t n = r.u32("sample count");
    ds.height = static_cast<int>(r.u32("height"));
    ds.width = static_cast<int>(r.u32("width"));
    ds.channels = static_cast<int>(r.u32("channels"));
    ds.num_classes = static_cast<int>(r.u32("class count"));
    if (ds.height < 1 || ds.width < 1 || ds.channels < 1 || ds.num_classes < 1)
        throw format_error_at(path + ": degenerate header dimensions", 8);

    ds.pixels.resize(n * ds.image_dim());
    for (float& p : ds.pixels) p = r.f32("pixel data");
    ds.labels.resize(n);
    for (std::uint16_t& l : ds.labels) l = r.u16("label data");
    for (int k = 0; k < ds.num_classes; ++k) {
        const std::uint32_t len = r.u32("class name length");
        ds.class_names.push_back(r.bytes(len, "class name"));
    }
    r.expect_exhausted();
    ds.validate();
    return ds;
}

} // namespace diffcls
