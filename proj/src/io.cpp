#include "zsfse/io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <openssl/evp.h>
#include <png.h>

namespace zs {

namespace {

constexpr char const *kMagic = "zsfse-raw 1";

auto EncodeLittle(std::vector<std::complex<float>> const &data) -> std::vector<unsigned char>
{
  std::vector<unsigned char> out(data.size() * 8);
  size_t o = 0;
  for (auto const &v : data) {
    for (float f : {v.real(), v.imag()}) {
      auto const u = std::bit_cast<std::uint32_t>(f);
      for (int b = 0; b < 4; b++) { out[o++] = static_cast<unsigned char>((u >> (8 * b)) & 0xFFu); }
    }
  }
  return out;
}

auto DecodeLittle(std::vector<unsigned char> const &bytes) -> std::vector<std::complex<float>>
{
  std::vector<std::complex<float>> out(bytes.size() / 8);
  size_t o = 0;
  for (auto &v : out) {
    float parts[2];
    for (float &f : parts) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; b++) { u |= static_cast<std::uint32_t>(bytes[o++]) << (8 * b); }
      f = std::bit_cast<float>(u);
    }
    v = {parts[0], parts[1]};
  }
  return out;
}

auto HdrPath(fs::path const &stem) -> fs::path { return fs::path(stem.string() + ".hdr"); }
auto RawPath(fs::path const &stem) -> fs::path { return fs::path(stem.string() + ".raw"); }

void ExpectAxes(RawArray const &r, std::vector<std::string> const &axes)
{
  if (r.axes != axes) {
    throw AxisError(fmt::format("array axes [{}] but expected [{}]", fmt::join(r.axes, " "), fmt::join(axes, " ")));
  }
}

template <typename Tag>
auto StackToRaw(Stack<Tag> const &s, std::string lead) -> RawArray
{
  RawArray r{{std::move(lead), "W", "H"}, {s.size(), s.width(), s.height()}, {}};
  r.data.reserve(static_cast<size_t>(r.elements()));
  for (auto const &im : s.data) {
    for (Index i = 0; i < im.size(); i++) { r.data.emplace_back(im.data()[i]); }
  }
  return r;
}

template <typename Tag>
auto StackFromRaw(RawArray const &r, std::string const &lead) -> Stack<Tag>
{
  ExpectAxes(r, {lead, "W", "H"});
  Stack<Tag> s(r.shape[0], r.shape[1], r.shape[2]);
  size_t o = 0;
  for (auto &im : s.data) {
    for (Index i = 0; i < im.size(); i++) { im.data()[i] = Cx(r.data[o++]); }
  }
  return s;
}

} // namespace

auto RawArray::elements() const -> Index
{
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

auto Sha256Hex(void const *bytes, size_t n) -> std::string
{
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes, n, md, &len, EVP_sha256(), nullptr) != 1) { throw IoError("SHA-256 failed"); }
  std::string hex;
  for (unsigned int i = 0; i < len; i++) { hex += fmt::format("{:02x}", md[i]); }
  return hex;
}

auto Sha256File(fs::path const &path) -> std::string
{
  std::ifstream f(path, std::ios::binary);
  if (!f) { throw IoError(fmt::format("cannot open {}", path.string())); }
  std::vector<char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return Sha256Hex(buf.data(), buf.size());
}

void SaveArray(fs::path const &stem, RawArray const &a)
{
  if (a.axes.size() != a.shape.size()) { throw InvalidArgument("axis names and shape differ in length"); }
  if (static_cast<Index>(a.data.size()) != a.elements()) { throw ShapeError("array data does not match its shape"); }
  auto const bytes = EncodeLittle(a.data);
  {
    std::ofstream f(RawPath(stem), std::ios::binary | std::ios::trunc);
    if (!f) { throw IoError(fmt::format("cannot write {}", RawPath(stem).string())); }
    f.write(reinterpret_cast<char const *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  std::ofstream h(HdrPath(stem), std::ios::trunc);
  if (!h) { throw IoError(fmt::format("cannot write {}", HdrPath(stem).string())); }
  h << kMagic << '\n'
    << "axes " << fmt::format("{}", fmt::join(a.axes, " ")) << '\n'
    << "shape " << fmt::format("{}", fmt::join(a.shape, " ")) << '\n'
    << "dtype complex64\n"
    << "endian little\n"
    << "sha256 " << Sha256Hex(bytes.data(), bytes.size()) << '\n';
}

auto LoadArray(fs::path const &stem, std::vector<std::string> const &expectAxes) -> RawArray
{
  std::ifstream h(HdrPath(stem));
  if (!h) { throw IoError(fmt::format("missing array header {}", HdrPath(stem).string())); }
  std::string line;
  if (!std::getline(h, line) || line != kMagic) { throw IoError(fmt::format("{}: not an array header", HdrPath(stem).string())); }
  RawArray r;
  std::string digest, dtype, endian;
  while (std::getline(h, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "axes") {
      for (std::string s; ls >> s;) { r.axes.push_back(s); }
    } else if (key == "shape") {
      for (Index n; ls >> n;) {
        if (n < 0) { throw IoError("negative extent in array header"); }
        r.shape.push_back(n);
      }
    } else if (key == "dtype") {
      ls >> dtype;
    } else if (key == "endian") {
      ls >> endian;
    } else if (key == "sha256") {
      ls >> digest;
    } else if (!key.empty()) {
      throw IoError(fmt::format("{}: unknown header key '{}'", HdrPath(stem).string(), key));
    }
  }
  if (dtype != "complex64" || endian != "little") { throw IoError("only little-endian complex64 arrays are supported"); }
  if (r.axes.size() != r.shape.size()) { throw IoError("header axes and shape differ in length"); }
  if (!expectAxes.empty()) { ExpectAxes(r, expectAxes); }

  std::ifstream f(RawPath(stem), std::ios::binary);
  if (!f) { throw IoError(fmt::format("missing array payload {}", RawPath(stem).string())); }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (static_cast<Index>(bytes.size()) != 8 * r.elements()) {
    throw IoError(fmt::format("{}: payload has {} bytes, header implies {}", RawPath(stem).string(), bytes.size(),
                              8 * r.elements()));
  }
  if (Sha256Hex(bytes.data(), bytes.size()) != digest) {
    throw IoError(fmt::format("{}: digest mismatch", RawPath(stem).string()));
  }
  r.data = DecodeLittle(bytes);
  return r;
}

auto ToRaw(EchoImages const &x) -> RawArray { return StackToRaw(x, "T"); }
auto ToRaw(CoeffMaps const &a) -> RawArray { return StackToRaw(a, "K"); }
auto ToRaw(SensMaps const &s) -> RawArray { return StackToRaw(s, "C"); }

auto ToRaw(EchoSeriesKSpace const &y) -> RawArray
{
  RawArray r{{"T", "W", "H", "C"}, {y.echoCount(), y.width(), y.height(), y.coils()}, {}};
  r.data.reserve(static_cast<size_t>(r.elements()));
  for (Index t = 0; t < y.echoCount(); t++) {
    for (Index x = 0; x < y.width(); x++) {
      for (Index k = 0; k < y.height(); k++) {
        for (Index c = 0; c < y.coils(); c++) { r.data.emplace_back(y[t][c](x, k)); }
      }
    }
  }
  return r;
}

auto ToRaw(SamplingMask const &m) -> RawArray
{
  RawArray r{{"T", "H"}, {m.echoes(), m.height()}, {}};
  for (Index t = 0; t < m.echoes(); t++) {
    for (Index k = 0; k < m.height(); k++) { r.data.emplace_back(m(t, k) ? 1.0f : 0.0f, 0.0f); }
  }
  return r;
}

auto ToRaw(ReImage const &im) -> RawArray
{
  RawArray r{{"W", "H"}, {im.rows(), im.cols()}, {}};
  for (Index i = 0; i < im.size(); i++) { r.data.emplace_back(static_cast<float>(im.data()[i]), 0.0f); }
  return r;
}

auto EchoImagesFromRaw(RawArray const &r) -> EchoImages { return StackFromRaw<EchoTag>(r, "T"); }
auto CoeffMapsFromRaw(RawArray const &r) -> CoeffMaps { return StackFromRaw<CoeffTag>(r, "K"); }
auto SensMapsFromRaw(RawArray const &r) -> SensMaps { return StackFromRaw<CoilTag>(r, "C"); }

auto MaskFromRaw(RawArray const &r) -> SamplingMask
{
  ExpectAxes(r, {"T", "H"});
  SamplingMask m(r.shape[0], r.shape[1]);
  for (Index i = 0; i < m.lines.size(); i++) { m.lines.data()[i] = r.data[static_cast<size_t>(i)].real() != 0.0f; }
  return m;
}

auto KSpaceFromRaw(RawArray const &r, SamplingMask const &mask) -> EchoSeriesKSpace
{
  ExpectAxes(r, {"T", "W", "H", "C"});
  if (mask.echoes() != r.shape[0] || mask.height() != r.shape[2]) { throw ShapeError("mask does not match k-space"); }
  EchoSeriesKSpace y(r.shape[0], r.shape[1], r.shape[2], r.shape[3], mask);
  size_t o = 0;
  for (Index t = 0; t < y.echoCount(); t++) {
    for (Index x = 0; x < y.width(); x++) {
      for (Index k = 0; k < y.height(); k++) {
        for (Index c = 0; c < y.coils(); c++) { y[t][c](x, k) = Cx(r.data[o++]); }
      }
    }
  }
  return y;
}

auto RealImageFromRaw(RawArray const &r) -> ReImage
{
  ExpectAxes(r, {"W", "H"});
  ReImage im(r.shape[0], r.shape[1]);
  for (Index i = 0; i < im.size(); i++) { im.data()[i] = r.data[static_cast<size_t>(i)].real(); }
  return im;
}

auto WritePng(fs::path const &path, ReImage const &im) -> PngWindow
{
  if (im.size() == 0) { throw InvalidArgument("cannot export an empty image"); }
  PngWindow win{im.minCoeff(), im.maxCoeff()};
  double const span = win.hi > win.lo ? win.hi - win.lo : 1.0;
  auto const w = static_cast<png_uint_32>(im.rows()), h = static_cast<png_uint_32>(im.cols());
  std::vector<png_byte> pixels(static_cast<size_t>(w) * h);
  for (png_uint_32 y = 0; y < h; y++) {
    for (png_uint_32 x = 0; x < w; x++) {
      double const v = (im(x, y) - win.lo) / span;
      pixels[y * w + x] = static_cast<png_byte>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
  }

  FILE *fp = std::fopen(path.c_str(), "wb");
  if (!fp) { throw IoError(fmt::format("cannot write {}", path.string())); }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError(fmt::format("PNG encoding failed for {}", path.string()));
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  std::string lo = fmt::format("{:.17g}", win.lo), hi = fmt::format("{:.17g}", win.hi);
  png_text text[2]{};
  text[0].compression = PNG_TEXT_COMPRESSION_NONE;
  text[0].key = const_cast<char *>("window_min");
  text[0].text = lo.data();
  text[1].compression = PNG_TEXT_COMPRESSION_NONE;
  text[1].key = const_cast<char *>("window_max");
  text[1].text = hi.data();
  png_set_text(png, info, text, 2);
  png_write_info(png, info);
  for (png_uint_32 y = 0; y < h; y++) { png_write_row(png, &pixels[y * w]); }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
  return win;
}

auto ReadPngWindow(fs::path const &path) -> PngWindow
{
  FILE *fp = std::fopen(path.c_str(), "rb");
  if (!fp) { throw IoError(fmt::format("cannot open {}", path.string())); }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError(fmt::format("PNG decoding failed for {}", path.string()));
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  png_textp text = nullptr;
  int n = 0;
  png_get_text(png, info, &text, &n);
  PngWindow win;
  int found = 0;
  for (int i = 0; i < n; i++) {
    std::string const key = text[i].key;
    if (key == "window_min") { win.lo = std::stod(text[i].text), found++; }
    if (key == "window_max") { win.hi = std::stod(text[i].text), found++; }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  if (found != 2) { throw IoError(fmt::format("{} has no window metadata", path.string())); }
  return win;
}

} // namespace zs
