#pragma once

// Shared geometric types, camera projection, image planes and deterministic
// RNG plumbing used by every other module.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdn {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Deterministic RNG. std::mt19937_64 is bit-exact across platforms as an
// engine; the standard *distributions* are not, so we roll our own here.
// Single-owner by convention: never share one stream, split() instead.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n must be > 0");
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do { x = engine_(); } while (x >= limit);
        return x % n;
    }

    // standard normal via Box-Muller
    double normal() {
        if (have_spare_) { have_spare_ = false; return spare_; }
        double u1, u2;
        do { u1 = uniform(); } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

    Vec3 normal3() { return Vec3(normal(), normal(), normal()); }

    // derive an independent stream; mixing based on splitmix64
    SeededRng split(std::uint64_t tag) const {
        std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (tag + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return SeededRng(z ^ (z >> 31));
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Camera with pinhole intrinsics K and world-to-camera pose (R, t):
// x_cam = R * x_world + t. Pixel coordinates are continuous with integer
// values at pixel centers.
struct CameraView {
    Mat3 intrinsics = Mat3::Identity();
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
    int width = 0;
    int height = 0;

    void validate() const {
        if ((rotation.transpose() * rotation - Mat3::Identity()).norm() > 1e-9)
            throw std::invalid_argument("CameraView: rotation is not orthonormal");
        if (intrinsics(0, 0) <= 0.0 || intrinsics(1, 1) <= 0.0)
            throw std::invalid_argument("CameraView: focal lengths must be positive");
        const double cx = intrinsics(0, 2), cy = intrinsics(1, 2);
        if (cx < 0.0 || cx > width - 1 || cy < 0.0 || cy > height - 1)
            throw std::invalid_argument("CameraView: principal point outside image");
    }

    Vec3 camera_center() const { return -(rotation.transpose() * translation); }

    // unit world-space direction through a (continuous) pixel
    Vec3 pixel_direction(double px, double py) const {
        const double fx = intrinsics(0, 0), fy = intrinsics(1, 1);
        const double cx = intrinsics(0, 2), cy = intrinsics(1, 2);
        const Vec3 cam((px - cx) / fx, (py - cy) / fy, 1.0);
        return (rotation.transpose() * cam).normalized();
    }
};

struct Ray {
    Vec3 origin = Vec3::Zero();
    Vec3 direction = Vec3::UnitZ();  // unit length
    double near = 0.0;
    double far = 1.0;

    void validate() const {
        if (std::abs(direction.norm() - 1.0) > 1e-9)
            throw std::invalid_argument("Ray: direction must be unit length");
        if (!(far > near) || !(near > 0.0))
            throw std::invalid_argument("Ray: need far > near > 0");
    }

    Vec3 at(double t) const { return origin + t * direction; }
};

inline Ray ray_through_pixel(const CameraView& view, double px, double py,
                             double near, double far) {
    Ray r;
    r.origin = view.camera_center();
    r.direction = view.pixel_direction(px, py);
    r.near = near;
    r.far = far;
    return r;
}

// ---------------------------------------------------------------------------
// Projection. Returns nullopt when the point is at or behind the camera
// plane (depth <= 0); callers treat that as "this view cannot see the point".
struct PixelDepth {
    Vec2 pixel;
    double depth;  // camera-frame z
};

inline std::optional<PixelDepth> project(const CameraView& view, const Vec3& x) {
    const Vec3 cam = view.rotation * x + view.translation;
    if (cam.z() <= 0.0) return std::nullopt;
    const Vec3 h = view.intrinsics * cam;
    return PixelDepth{Vec2(h.x() / h.z(), h.y() / h.z()), cam.z()};
}

// Projection plus the 2x3 Jacobian d(pixel)/d(x_world), used by losses that
// differentiate through a reprojection.
struct PixelDepthJacobian {
    Vec2 pixel;
    double depth;
    Eigen::Matrix<double, 2, 3> jacobian;
};

inline std::optional<PixelDepthJacobian> project_with_jacobian(
    const CameraView& view, const Vec3& x) {
    const Vec3 cam = view.rotation * x + view.translation;
    if (cam.z() <= 0.0) return std::nullopt;
    const double fx = view.intrinsics(0, 0), fy = view.intrinsics(1, 1);
    const double cx = view.intrinsics(0, 2), cy = view.intrinsics(1, 2);
    const double iz = 1.0 / cam.z();
    PixelDepthJacobian out;
    out.pixel = Vec2(fx * cam.x() * iz + cx, fy * cam.y() * iz + cy);
    out.depth = cam.z();
    // d(pixel)/d(cam), then chain with d(cam)/d(x) = R
    Eigen::Matrix<double, 2, 3> dcam;
    dcam << fx * iz, 0.0, -fx * cam.x() * iz * iz,
            0.0, fy * iz, -fy * cam.y() * iz * iz;
    out.jacobian = dcam * view.rotation;
    return out;
}

inline Vec3 backproject(const CameraView& view, const Vec2& pixel, double depth) {
    const double fx = view.intrinsics(0, 0), fy = view.intrinsics(1, 1);
    const double cx = view.intrinsics(0, 2), cy = view.intrinsics(1, 2);
    const Vec3 cam((pixel.x() - cx) / fx * depth, (pixel.y() - cy) / fy * depth, depth);
    return view.rotation.transpose() * (cam - view.translation);
}

// ---------------------------------------------------------------------------
// Row-major multi-channel image grid.
template <typename T>
class ImagePlane {
public:
    ImagePlane() = default;
    ImagePlane(int width, int height, int channels, T fill = T())
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<size_t>(width) * height * channels, fill) {
        if (width <= 0 || height <= 0 || channels <= 0)
            throw std::invalid_argument("ImagePlane: dimensions must be positive");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    size_t size() const { return data_.size(); }

    T& at(int x, int y, int c = 0) {
        return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
    }
    const T& at(int x, int y, int c = 0) const {
        return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
    }

    bool contains(double px, double py) const {
        return px >= 0.0 && px <= width_ - 1 && py >= 0.0 && py <= height_ - 1;
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

private:
    int width_ = 0, height_ = 0, channels_ = 0;
    std::vector<T> data_;
};

// Bilinear lookup at a continuous pixel position. Out-of-bounds positions
// yield nullopt; callers skip that source view.
inline std::optional<Eigen::VectorXd> bilinear_sample(const ImagePlane<double>& img,
                                                      const Vec2& p) {
    if (!img.contains(p.x(), p.y())) return std::nullopt;
    const int x0 = std::min(static_cast<int>(std::floor(p.x())), img.width() - 2 >= 0 ? img.width() - 2 : 0);
    const int y0 = std::min(static_cast<int>(std::floor(p.y())), img.height() - 2 >= 0 ? img.height() - 2 : 0);
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double ax = p.x() - x0, ay = p.y() - y0;
    Eigen::VectorXd out(img.channels());
    for (int c = 0; c < img.channels(); ++c) {
        const double v00 = img.at(x0, y0, c), v10 = img.at(x1, y0, c);
        const double v01 = img.at(x0, y1, c), v11 = img.at(x1, y1, c);
        out[c] = (1 - ax) * (1 - ay) * v00 + ax * (1 - ay) * v10 +
                 (1 - ax) * ay * v01 + ax * ay * v11;
    }
    return out;
}

// Bilinear lookup plus d(value)/d(pixel) per channel.
struct BilinearGrad {
    Eigen::VectorXd value;
    Eigen::MatrixXd dvalue_dp;  // channels x 2
};

inline std::optional<BilinearGrad> bilinear_sample_grad(const ImagePlane<double>& img,
                                                        const Vec2& p) {
    if (!img.contains(p.x(), p.y())) return std::nullopt;
    const int x0 = std::min(static_cast<int>(std::floor(p.x())), img.width() - 2 >= 0 ? img.width() - 2 : 0);
    const int y0 = std::min(static_cast<int>(std::floor(p.y())), img.height() - 2 >= 0 ? img.height() - 2 : 0);
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double ax = p.x() - x0, ay = p.y() - y0;
    BilinearGrad out;
    out.value.resize(img.channels());
    out.dvalue_dp.resize(img.channels(), 2);
    for (int c = 0; c < img.channels(); ++c) {
        const double v00 = img.at(x0, y0, c), v10 = img.at(x1, y0, c);
        const double v01 = img.at(x0, y1, c), v11 = img.at(x1, y1, c);
        out.value[c] = (1 - ax) * (1 - ay) * v00 + ax * (1 - ay) * v10 +
                       (1 - ax) * ay * v01 + ax * ay * v11;
        out.dvalue_dp(c, 0) = (1 - ay) * (v10 - v00) + ay * (v11 - v01);
        out.dvalue_dp(c, 1) = (1 - ax) * (v01 - v00) + ax * (v11 - v10);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Image serialization.
//   RGB images: binary PPM (P6, 8-bit).
//   Float maps: flat little-endian float32 with a 16-byte header
//   (magic "FDN1", u32 width, u32 height, u32 channels).

inline void write_ppm(const std::string& path, const ImagePlane<double>& rgb) {
    if (rgb.channels() != 3)
        throw std::invalid_argument("write_ppm: expected 3 channels");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_ppm: cannot open " + path);
    f << "P6\n" << rgb.width() << " " << rgb.height() << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(rgb.width()) * 3);
    for (int y = 0; y < rgb.height(); ++y) {
        for (int x = 0; x < rgb.width(); ++x)
            for (int c = 0; c < 3; ++c) {
                double v = std::clamp(rgb.at(x, y, c), 0.0, 1.0);
                row[static_cast<size_t>(x) * 3 + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
        f.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
    if (!f) throw std::runtime_error("write_ppm: write failed for " + path);
}

inline ImagePlane<double> read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_ppm: cannot open " + path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    f >> magic >> w >> h >> maxval;
    if (magic != "P6" || maxval != 255 || w <= 0 || h <= 0)
        throw std::runtime_error("read_ppm: unsupported PPM " + path);
    f.get();  // single whitespace after header
    ImagePlane<double> img(w, h, 3);
    std::vector<unsigned char> buf(static_cast<size_t>(w) * h * 3);
    f.read(reinterpret_cast<char*>(buf.data()), buf.size());
    if (!f) throw std::runtime_error("read_ppm: truncated file " + path);
    for (size_t i = 0; i < buf.size(); ++i)
        img.data()[i] = buf[i] / 255.0;
    return img;
}

namespace detail {
inline void put_u32le(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 4);
}
inline std::uint32_t get_u32le(std::ifstream& f) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace detail

inline void write_float_map(const std::string& path, const ImagePlane<double>& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_float_map: cannot open " + path);
    f.write("FDN1", 4);
    detail::put_u32le(f, static_cast<std::uint32_t>(img.width()));
    detail::put_u32le(f, static_cast<std::uint32_t>(img.height()));
    detail::put_u32le(f, static_cast<std::uint32_t>(img.channels()));
    std::vector<float> buf(img.size());
    for (size_t i = 0; i < buf.size(); ++i)
        buf[i] = static_cast<float>(img.data()[i]);
    f.write(reinterpret_cast<const char*>(buf.data()), buf.size() * sizeof(float));
    if (!f) throw std::runtime_error("write_float_map: write failed for " + path);
}

inline ImagePlane<double> read_float_map(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_float_map: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "FDN1", 4) != 0)
        throw std::runtime_error("read_float_map: bad magic in " + path);
    const std::uint32_t w = detail::get_u32le(f);
    const std::uint32_t h = detail::get_u32le(f);
    const std::uint32_t c = detail::get_u32le(f);
    if (!f || w == 0 || h == 0 || c == 0)
        throw std::runtime_error("read_float_map: bad header in " + path);
    ImagePlane<double> img(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c));
    std::vector<float> buf(img.size());
    f.read(reinterpret_cast<char*>(buf.data()), buf.size() * sizeof(float));
    if (!f) throw std::runtime_error("read_float_map: truncated file " + path);
    for (size_t i = 0; i < buf.size(); ++i)
        img.data()[i] = buf[i];
    return img;
}

}  // namespace fdn
