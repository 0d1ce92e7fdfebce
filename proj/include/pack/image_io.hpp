#pragma once

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pack/error.hpp"
#include "pack/grid.hpp"

namespace pack {

// ---------------------------------------------------------------------------
// Heightmap snapshots
// ---------------------------------------------------------------------------

// 16-bit binary PGM, heights scaled so `max_height` maps to 65535.
inline void write_pgm16(const std::filesystem::path& path, const HeightGrid& hm, double max_height) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "P5\n" << hm.cols() << ' ' << hm.rows() << "\n65535\n";
  for (double h : hm.values()) {
    const auto v = static_cast<std::uint16_t>(std::lround(std::clamp(h / max_height, 0.0, 1.0) * 65535.0));
    const char be[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    out.write(be, 2);
  }
}

inline void write_heightmap_csv(std::ostream& out, const HeightGrid& hm) {
  out.precision(17);
  for (std::size_t r = 0; r < hm.rows(); ++r) {
    for (std::size_t c = 0; c < hm.cols(); ++c) out << (c ? "," : "") << hm(r, c);
    out << '\n';
  }
}

inline HeightGrid read_heightmap_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
      } catch (const std::exception&) {
        throw Error("heightmap CSV line " + std::to_string(lineno) + ": bad value '" + tok + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error("heightmap CSV line " + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error("heightmap CSV is empty");
  HeightGrid hm(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (rows[r][c] < 0) throw Error("heightmap CSV contains a negative height");
      hm(r, c) = rows[r][c];
    }
  return hm;
}

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::string& s, std::uint32_t v) {
  for (int k = 3; k >= 0; --k) s.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

inline void put_chunk(std::string& png, const char* type, const std::string& data) {
  put_u32(png, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  png += body;
  put_u32(png, static_cast<std::uint32_t>(
                   crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

}  // namespace detail

// channels = 1 (gray) or 3 (RGB), 8 bits each, row-major.
inline std::string encode_png(std::size_t width, std::size_t height, int channels,
                              const std::vector<std::uint8_t>& pixels) {
  std::string raw;
  raw.reserve(height * (width * channels + 1));
  for (std::size_t y = 0; y < height; ++y) {
    raw.push_back(0);  // filter: none
    raw.append(reinterpret_cast<const char*>(pixels.data() + y * width * channels), width * channels);
  }
  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::string z(zlen, '\0');
  if (compress2(reinterpret_cast<Bytef*>(z.data()), &zlen, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw Error("zlib compression failed");
  z.resize(zlen);

  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  detail::put_u32(ihdr, static_cast<std::uint32_t>(width));
  detail::put_u32(ihdr, static_cast<std::uint32_t>(height));
  ihdr += static_cast<char>(8);
  ihdr += static_cast<char>(channels == 1 ? 0 : 2);
  ihdr += std::string("\0\0\0", 3);
  detail::put_chunk(png, "IHDR", ihdr);
  detail::put_chunk(png, "IDAT", z);
  detail::put_chunk(png, "IEND", "");
  return png;
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Values in [0, 1] mapped to 8-bit gray.
inline void write_png_gray(const std::filesystem::path& path, const Grid<double>& img) {
  std::vector<std::uint8_t> px(img.size());
  for (std::size_t i = 0; i < img.size(); ++i)
    px[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img.values()[i], 0.0, 1.0) * 255.0));
  write_file(path, encode_png(img.cols(), img.rows(), 1, px));
}

// ---------------------------------------------------------------------------
// Minimal chart rendering (no text; series colors are listed in the CSV).
// ---------------------------------------------------------------------------

using Rgb = std::array<std::uint8_t, 3>;

inline Rgb series_color(std::size_t i) {
  static const Rgb palette[] = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40},
                                {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127}};
  return palette[i % std::size(palette)];
}

class Canvas {
 public:
  Canvas(std::size_t w, std::size_t h) : w_(w), h_(h), px_(w * h * 3, 255) {}

  void set(long x, long y, Rgb c) {
    if (x < 0 || y < 0 || x >= static_cast<long>(w_) || y >= static_cast<long>(h_)) return;
    const std::size_t i = (static_cast<std::size_t>(y) * w_ + static_cast<std::size_t>(x)) * 3;
    px_[i] = c[0], px_[i + 1] = c[1], px_[i + 2] = c[2];
  }
  void fill_rect(long x0, long y0, long x1, long y1, Rgb c) {
    for (long y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
      for (long x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
  }
  void line(long x0, long y0, long x1, long y1, Rgb c) {
    const long dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const long sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    long err = dx + dy;
    for (;;) {
      set(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      const long e2 = 2 * err;
      if (e2 >= dy) err += dy, x0 += sx;
      if (e2 <= dx) err += dx, y0 += sy;
    }
  }
  std::size_t width() const { return w_; }
  std::size_t height() const { return h_; }
  void save(const std::filesystem::path& path) const { write_file(path, encode_png(w_, h_, 3, px_)); }

 private:
  std::size_t w_, h_;
  std::vector<std::uint8_t> px_;
};

struct PlotFrame {
  long left = 40, right = 620, top = 20, bottom = 380;
};

inline Canvas make_axes(const PlotFrame& f = {}) {
  Canvas c(640, 400);
  const Rgb axis{0, 0, 0}, grid{225, 225, 225};
  for (int k = 1; k < 4; ++k) {
    const long y = f.bottom - (f.bottom - f.top) * k / 4;
    c.line(f.left, y, f.right, y, grid);
  }
  c.line(f.left, f.bottom, f.right, f.bottom, axis);
  c.line(f.left, f.bottom, f.left, f.top, axis);
  return c;
}

// Side-by-side histograms over [0, 1], one bar group per bin.
inline void plot_histograms(const std::filesystem::path& path, const std::vector<std::vector<double>>& series,
                            std::size_t bins = 10) {
  PlotFrame f;
  Canvas c = make_axes(f);
  std::vector<std::vector<double>> freq(series.size(), std::vector<double>(bins, 0.0));
  double peak = 1e-12;
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (double v : series[s]) {
      const auto b = std::min(bins - 1, static_cast<std::size_t>(std::clamp(v, 0.0, 1.0) * static_cast<double>(bins)));
      freq[s][b] += 1.0 / static_cast<double>(std::max<std::size_t>(1, series[s].size()));
    }
    for (double q : freq[s]) peak = std::max(peak, q);
  }
  const double bin_w = static_cast<double>(f.right - f.left) / static_cast<double>(bins);
  const double bar_w = bin_w / static_cast<double>(std::max<std::size_t>(1, series.size()) + 1);
  for (std::size_t s = 0; s < series.size(); ++s)
    for (std::size_t b = 0; b < bins; ++b) {
      const long x0 = f.left + static_cast<long>(bin_w * static_cast<double>(b) + bar_w * (static_cast<double>(s) + 0.5));
      const long x1 = x0 + std::max<long>(1, static_cast<long>(bar_w) - 1);
      const long y = f.bottom - static_cast<long>((f.bottom - f.top) * freq[s][b] / peak);
      if (freq[s][b] > 0) c.fill_rect(x0, y, x1, f.bottom - 1, series_color(s));
    }
  c.save(path);
}

// Polylines of per-step means; y range [0, 1].
inline void plot_lines(const std::filesystem::path& path, const std::vector<std::vector<double>>& series) {
  PlotFrame f;
  Canvas c = make_axes(f);
  std::size_t longest = 2;
  for (const auto& s : series) longest = std::max(longest, s.size());
  auto px = [&](std::size_t i) {
    return f.left + static_cast<long>(static_cast<double>(f.right - f.left) * static_cast<double>(i) /
                                      static_cast<double>(longest - 1));
  };
  auto py = [&](double v) { return f.bottom - static_cast<long>((f.bottom - f.top) * std::clamp(v, 0.0, 1.0)); };
  for (std::size_t s = 0; s < series.size(); ++s)
    for (std::size_t i = 0; i < series[s].size(); ++i) {
      if (i > 0) c.line(px(i - 1), py(series[s][i - 1]), px(i), py(series[s][i]), series_color(s));
      c.fill_rect(px(i) - 1, py(series[s][i]) - 1, px(i) + 1, py(series[s][i]) + 1, series_color(s));
    }
  c.save(path);
}

}  // namespace pack
