#include "advdrop/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "advdrop/errors.hpp"
#include "advdrop/rng.hpp"

namespace advdrop {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::vector<unsigned char> read_all(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  f.seekg(0, std::ios::end);
  std::streamoff len = f.tellg();
  f.seekg(0);
  std::vector<unsigned char> buf(static_cast<std::size_t>(len));
  f.read(reinterpret_cast<char*>(buf.data()), len);
  if (!f) throw IoError("failed reading " + path);
  return buf;
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

void put_be32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

// -------- synthetic digits --------

struct Seg {
  double x1, y1, x2, y2;
};

void add_polyline(std::vector<Seg>& out, const std::vector<std::pair<double, double>>& pts) {
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    out.push_back({pts[i].first, pts[i].second, pts[i + 1].first, pts[i + 1].second});
  }
}

void add_ellipse(std::vector<Seg>& out, double cx, double cy, double rx, double ry) {
  const int kPts = 22;
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i <= kPts; ++i) {
    double a = 2.0 * M_PI * double(i) / kPts;
    pts.emplace_back(cx + rx * std::cos(a), cy + ry * std::sin(a));
  }
  add_polyline(out, pts);
}

// Canvas coordinates in [0,1]^2, y growing downward.
const std::vector<std::vector<Seg>>& glyphs() {
  static const std::vector<std::vector<Seg>> g = [] {
    std::vector<std::vector<Seg>> all(10);
    add_ellipse(all[0], 0.5, 0.5, 0.20, 0.30);
    add_polyline(all[1], {{0.38, 0.30}, {0.52, 0.16}, {0.52, 0.84}});
    add_polyline(all[2], {{0.30, 0.32},
                          {0.36, 0.20},
                          {0.52, 0.16},
                          {0.66, 0.22},
                          {0.69, 0.34},
                          {0.58, 0.52},
                          {0.40, 0.66},
                          {0.30, 0.82},
                          {0.72, 0.82}});
    add_polyline(all[3], {{0.32, 0.20}, {0.55, 0.16}, {0.67, 0.28}, {0.58, 0.42}, {0.46, 0.47}});
    add_polyline(all[3], {{0.46, 0.47}, {0.64, 0.54}, {0.68, 0.70}, {0.54, 0.83}, {0.31, 0.78}});
    add_polyline(all[4], {{0.62, 0.85}, {0.62, 0.15}, {0.28, 0.62}, {0.76, 0.62}});
    add_polyline(all[5], {{0.68, 0.17},
                          {0.33, 0.17},
                          {0.30, 0.45},
                          {0.55, 0.41},
                          {0.68, 0.53},
                          {0.67, 0.71},
                          {0.51, 0.83},
                          {0.30, 0.77}});
    add_polyline(all[6], {{0.62, 0.16},
                          {0.44, 0.27},
                          {0.33, 0.47},
                          {0.32, 0.67},
                          {0.44, 0.83},
                          {0.60, 0.79},
                          {0.68, 0.64},
                          {0.60, 0.51},
                          {0.45, 0.51},
                          {0.34, 0.61}});
    add_polyline(all[7], {{0.28, 0.17}, {0.72, 0.17}, {0.46, 0.85}});
    add_ellipse(all[8], 0.5, 0.33, 0.16, 0.16);
    add_ellipse(all[8], 0.5, 0.66, 0.19, 0.18);
    add_ellipse(all[9], 0.52, 0.34, 0.17, 0.17);
    add_polyline(all[9], {{0.68, 0.36}, {0.65, 0.60}, {0.52, 0.84}});
    return all;
  }();
  return g;
}

double seg_dist(double px, double py, const Seg& s) {
  double vx = s.x2 - s.x1, vy = s.y2 - s.y1;
  double wx = px - s.x1, wy = py - s.y1;
  double vv = vx * vx + vy * vy;
  double t = vv > 0.0 ? (wx * vx + wy * vy) / vv : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  double dx = wx - t * vx, dy = wy - t * vy;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  std::vector<unsigned char> ib = read_all(images_path);
  if (ib.size() < 16) throw FormatError(images_path + ": truncated header");
  if (be32(ib, 0) != kImageMagic) {
    throw FormatError(images_path + ": bad magic " + std::to_string(be32(ib, 0)) +
                      ", want 2051");
  }
  std::size_t n = be32(ib, 4), rows = be32(ib, 8), cols = be32(ib, 12);
  std::size_t want = 16 + n * rows * cols;
  if (ib.size() < want) {
    throw FormatError(images_path + ": truncated, " + std::to_string(ib.size()) + " bytes for " +
                      std::to_string(want));
  }

  std::vector<unsigned char> lb = read_all(labels_path);
  if (lb.size() < 8) throw FormatError(labels_path + ": truncated header");
  if (be32(lb, 0) != kLabelMagic) {
    throw FormatError(labels_path + ": bad magic " + std::to_string(be32(lb, 0)) +
                      ", want 2049");
  }
  std::size_t ln = be32(lb, 4);
  if (lb.size() < 8 + ln) {
    throw FormatError(labels_path + ": truncated, " + std::to_string(lb.size()) + " bytes for " +
                      std::to_string(8 + ln));
  }
  if (ln != n) {
    throw FormatError("image/label count mismatch: " + std::to_string(n) + " images, " +
                      std::to_string(ln) + " labels");
  }

  Dataset d;
  d.rows = rows;
  d.cols = cols;
  d.images = Tensor({n, rows * cols});
  d.labels.resize(n);
  for (std::size_t i = 0; i < n * rows * cols; ++i) {
    d.images[i] = double(ib[16 + i]) / 255.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (lb[8 + i] > 9) {
      throw FormatError(labels_path + ": label " + std::to_string(int(lb[8 + i])) +
                        " out of range 0-9");
    }
    d.labels[i] = int(lb[8 + i]);
  }
  return d;
}

void write_idx(const Dataset& d, const std::string& images_path, const std::string& labels_path) {
  std::size_t n = d.size();
  if (d.images.rank() != 2 || d.images.dim(0) != n || d.images.dim(1) != d.rows * d.cols) {
    throw ShapeError("write_idx: images " + shape_to_string(d.images.shape()) + " for " +
                     std::to_string(n) + " labels");
  }
  {
    std::ofstream f(images_path, std::ios::binary);
    if (!f) throw IoError("cannot open " + images_path + " for writing");
    put_be32(f, kImageMagic);
    put_be32(f, std::uint32_t(n));
    put_be32(f, std::uint32_t(d.rows));
    put_be32(f, std::uint32_t(d.cols));
    std::vector<unsigned char> bytes(d.images.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
      double v = std::clamp(d.images[i], 0.0, 1.0);
      bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!f) throw IoError("failed writing " + images_path);
  }
  {
    std::ofstream f(labels_path, std::ios::binary);
    if (!f) throw IoError("cannot open " + labels_path + " for writing");
    put_be32(f, kLabelMagic);
    put_be32(f, std::uint32_t(n));
    for (std::size_t i = 0; i < n; ++i) {
      f.put(char(d.labels[i]));
    }
    if (!f) throw IoError("failed writing " + labels_path);
  }
}

Dataset synth_digits(std::size_t count, std::uint64_t seed) {
  RngStream rng(seed);
  Dataset d;
  d.rows = d.cols = 28;
  d.images = Tensor({count, 784});
  d.labels.resize(count);
  for (std::size_t item = 0; item < count; ++item) {
    int label = int(rng.next_u64() % 10);
    d.labels[item] = label;
    const std::vector<Seg>& segs = glyphs()[std::size_t(label)];

    double theta = rng.uniform(-0.35, 0.35);
    double sx = rng.uniform(0.78, 1.18);
    double sy = rng.uniform(0.78, 1.18);
    double shear = rng.uniform(-0.22, 0.22);
    double tx = rng.uniform(-0.09, 0.09);
    double ty = rng.uniform(-0.09, 0.09);
    double thick = rng.uniform(0.045, 0.075);
    double bright = rng.uniform(0.72, 1.0);

    // Forward map: p = R * K * S * (q - .5) + .5 + t, canvas q to image p,
    // with rotation R, x-shear K and axis scales S. Pixels are filled by the
    // inverse map; det = sx * sy > 0 always.
    double ct = std::cos(theta), st = std::sin(theta);
    double a = ct * sx;
    double b = sy * (ct * shear - st);
    double c = st * sx;
    double e = sy * (st * shear + ct);
    double det = a * e - b * c;
    double ia = e / det, ib2 = -b / det, ic = -c / det, ie = a / det;

    double* img = d.images.data() + item * 784;
    const double soft = 0.035;
    for (std::size_t r = 0; r < 28; ++r) {
      for (std::size_t cpx = 0; cpx < 28; ++cpx) {
        double px = (double(cpx) + 0.5) / 28.0 - 0.5 - tx;
        double py = (double(r) + 0.5) / 28.0 - 0.5 - ty;
        double qx = ia * px + ib2 * py + 0.5;
        double qy = ic * px + ie * py + 0.5;
        double dist = 1e9;
        for (const Seg& s : segs) dist = std::min(dist, seg_dist(qx, qy, s));
        double ink = std::clamp((thick + soft - dist) / soft, 0.0, 1.0);
        double v = bright * ink + 0.05 * rng.normal();
        v = std::clamp(v, 0.0, 1.0);
        // Byte quantization keeps the in-memory data identical to an IDX
        // round trip.
        img[r * 28 + cpx] = double(std::lround(v * 255.0)) / 255.0;
      }
    }
  }
  return d;
}

Tensor one_hot(const std::vector<int>& labels, std::size_t classes) {
  Tensor t({labels.size(), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || std::size_t(labels[i]) >= classes) {
      throw DomainError("one_hot: label " + std::to_string(labels[i]) + " out of range");
    }
    t.at2(i, std::size_t(labels[i])) = 1.0;
  }
  return t;
}

}  // namespace advdrop
