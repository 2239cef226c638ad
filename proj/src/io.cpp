#include "ugan/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ugan {

void WritePgm16(std::filesystem::path const &file, CTensor const &x)
{
  if (x.rank() != 2) {
    throw Error("PGM dump needs an [H, W] image, got {}", ShapeStr(x.shape()));
  }
  double peak = 0;
  for (auto v : x.vec()) {
    peak = std::max(peak, std::abs(v));
  }
  std::ofstream os(file, std::ios::binary);
  if (!os) {
    throw Error("cannot write {}", file.string());
  }
  os << "P5\n" << x.dim(1) << " " << x.dim(0) << "\n65535\n";
  std::vector<unsigned char> buf;
  buf.reserve(static_cast<std::size_t>(x.size()) * 2);
  for (auto v : x.vec()) {
    auto const q = peak > 0 ? static_cast<unsigned>(std::lround(std::abs(v) / peak * 65535.0)) : 0u;
    buf.push_back(static_cast<unsigned char>(q >> 8));
    buf.push_back(static_cast<unsigned char>(q & 0xff));
  }
  os.write(reinterpret_cast<char const *>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) {
    throw Error("failed writing {}", file.string());
  }
}

Tensor ReadPgm16(std::filesystem::path const &file)
{
  std::ifstream is(file, std::ios::binary);
  std::string magic;
  Index w = 0, h = 0, maxval = 0;
  if (!(is >> magic >> w >> h >> maxval) || magic != "P5" || maxval != 65535 || w < 1 || h < 1) {
    throw Error("{} is not a 16-bit PGM", file.string());
  }
  is.get();
  std::vector<unsigned char> buf(static_cast<std::size_t>(w * h * 2));
  if (!is.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw Error("{}: pixel data truncated", file.string());
  }
  Tensor t({h, w});
  for (Index i = 0; i < t.size(); i++) {
    t[i] = buf[2 * i] * 256.0 + buf[2 * i + 1];
  }
  return t;
}

void WriteRaw(std::filesystem::path const &file, CTensor const &x)
{
  static_assert(std::endian::native == std::endian::little);
  std::ofstream os(file, std::ios::binary);
  os.write(reinterpret_cast<char const *>(x.data()), static_cast<std::streamsize>(x.size() * sizeof(Cx)));
  if (!os) {
    throw Error("failed writing {}", file.string());
  }
}

CTensor ReadRaw(std::filesystem::path const &file, Shape const &shape)
{
  std::error_code ec;
  auto const bytes = std::filesystem::file_size(file, ec);
  CTensor x(shape);
  if (ec || bytes != static_cast<std::uintmax_t>(x.size()) * sizeof(Cx)) {
    throw Error("{}: expected {} bytes for shape {}, found {}", file.string(), x.size() * sizeof(Cx), ShapeStr(shape),
      ec ? std::uintmax_t{0} : bytes);
  }
  std::ifstream is(file, std::ios::binary);
  if (!is.read(reinterpret_cast<char *>(x.data()), static_cast<std::streamsize>(bytes))) {
    throw Error("failed reading {}", file.string());
  }
  return x;
}

std::string ReadText(std::filesystem::path const &file)
{
  std::ifstream is(file);
  if (!is) {
    throw Error("cannot open {}", file.string());
  }
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

} // namespace ugan
