#include "pwppe/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pwppe {
namespace {

struct PgmHeader {
  std::size_t width = 0;
  std::size_t height = 0;
  unsigned maxval = 0;
};

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  char ch = 0;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string discard;
      std::getline(in, discard);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(ch);
  }
  return token;
}

PgmHeader read_header(std::istream& in, const std::string& path) {
  const std::string magic = next_token(in);
  if (magic != "P5") throw FormatError(path + ": not a binary PGM (P5)", 0);
  PgmHeader h;
  try {
    h.width = std::stoul(next_token(in));
    h.height = std::stoul(next_token(in));
    h.maxval = static_cast<unsigned>(std::stoul(next_token(in)));
  } catch (const std::logic_error&) {
    throw FormatError(path + ": malformed PGM header", static_cast<std::uint64_t>(in.tellg()));
  }
  if (h.width == 0 || h.height == 0 || h.maxval == 0 || h.maxval > 65535)
    throw FormatError(path + ": invalid PGM dimensions or maxval", static_cast<std::uint64_t>(in.tellg()));
  return h;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

std::vector<unsigned> read_samples(std::istream& in, const PgmHeader& h, const std::string& path) {
  const std::size_t count = h.width * h.height;
  const std::size_t bytes_per = h.maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(count * bytes_per);
  const auto start = static_cast<std::uint64_t>(in.tellg());
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw FormatError(path + ": truncated PGM pixel data", start + static_cast<std::uint64_t>(in.gcount()));
  std::vector<unsigned> samples(count);
  for (std::size_t i = 0; i < count; ++i) {
    samples[i] = bytes_per == 2 ? (unsigned(raw[2 * i]) << 8) | raw[2 * i + 1] : raw[i];
  }
  return samples;
}

}  // namespace

void write_pgm16(const std::string& path, const Image& image) {
  auto out = open_out(path);
  out << "P5\n" << image.width() << ' ' << image.height() << "\n65535\n";
  std::vector<unsigned char> raw(image.size() * 2);
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::clamp(image[i], 0.0, 1.0);
    const auto q = static_cast<unsigned>(std::lround(v * 65535.0));
    raw[2 * i] = static_cast<unsigned char>(q >> 8);
    raw[2 * i + 1] = static_cast<unsigned char>(q & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write failed: " + path);
}

Image read_pgm(const std::string& path) {
  auto in = open_in(path);
  const PgmHeader h = read_header(in, path);
  const auto samples = read_samples(in, h, path);
  Image image(h.width, h.height);
  for (std::size_t i = 0; i < samples.size(); ++i) image[i] = double(samples[i]) / double(h.maxval);
  return image;
}

void write_mask_pgm(const std::string& path, const Mask& mask) {
  auto out = open_out(path);
  out << "P5\n" << mask.width() << ' ' << mask.height() << "\n255\n";
  std::vector<unsigned char> raw(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) raw[i] = mask[i] ? 255 : 0;
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write failed: " + path);
}

Mask read_mask_pgm(const std::string& path) {
  auto in = open_in(path);
  const PgmHeader h = read_header(in, path);
  const auto samples = read_samples(in, h, path);
  Mask mask(h.width, h.height);
  for (std::size_t i = 0; i < samples.size(); ++i) mask[i] = samples[i] != 0 ? 1 : 0;
  return mask;
}

}  // namespace pwppe
