#include "spda/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "spda/errors.hpp"

namespace spda {
namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what,
                       std::size_t line = 0) {
  std::string msg = path.string();
  if (line > 0) msg += ":" + std::to_string(line);
  throw IoError(msg + ": " + what);
}

// Token reader over a PGM header that skips '#' comments and tracks line numbers.
class PgmHeaderReader {
 public:
  PgmHeaderReader(std::istream& in, const std::filesystem::path& path) : in_(in), path_(path) {}

  unsigned long next_number() {
    skip_space_and_comments();
    std::string tok;
    while (in_ && std::isdigit(in_.peek())) tok.push_back(static_cast<char>(in_.get()));
    if (tok.empty()) fail(path_, "expected an integer in PGM header", line_);
    return std::stoul(tok);
  }

  std::size_t line() const { return line_; }

 private:
  void skip_space_and_comments() {
    for (;;) {
      const int ch = in_.peek();
      if (ch == '#') {
        while (in_ && in_.get() != '\n') {
        }
        ++line_;
      } else if (ch != EOF && std::isspace(ch)) {
        if (in_.get() == '\n') ++line_;
      } else {
        return;
      }
    }
  }

  std::istream& in_;
  const std::filesystem::path& path_;
  std::size_t line_ = 1;
};

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '5')) {
    fail(path, "not a P2/P5 PGM file", 1);
  }
  const bool binary = magic[1] == '5';
  PgmHeaderReader header(in, path);
  const auto cols = header.next_number();
  const auto rows = header.next_number();
  const auto maxval = header.next_number();
  if (cols == 0 || rows == 0) fail(path, "zero image dimension", header.line());
  if (maxval == 0 || maxval > 65535) fail(path, "maxval out of range", header.line());

  std::vector<double> px(rows * cols);
  if (binary) {
    in.get();  // single whitespace byte after maxval
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(px.size() * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      fail(path, "truncated pixel data");
    }
    for (std::size_t k = 0; k < px.size(); ++k) {
      px[k] = bytes == 1 ? raw[k] : static_cast<double>((raw[2 * k] << 8) | raw[2 * k + 1]);
    }
  } else {
    std::size_t line = header.line();
    std::size_t k = 0;
    std::string tok;
    while (k < px.size()) {
      const int ch = in.get();
      if (ch == EOF) break;
      if (ch == '#') {
        while (in && in.get() != '\n') {
        }
        ++line;
        continue;
      }
      if (std::isspace(ch)) {
        if (ch == '\n') ++line;
        continue;
      }
      tok.assign(1, static_cast<char>(ch));
      while (in && std::isdigit(in.peek())) tok.push_back(static_cast<char>(in.get()));
      unsigned long v = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        fail(path, "invalid pixel value '" + tok + "'", line);
      }
      if (v > maxval) fail(path, "pixel value exceeds maxval", line);
      px[k++] = static_cast<double>(v);
    }
    if (k != px.size()) fail(path, "expected " + std::to_string(px.size()) + " pixels, found " +
                                       std::to_string(k), line);
  }
  return Image(rows, cols, std::move(px));
}

void write_pgm(const Image& img, const std::filesystem::path& path, unsigned maxval, bool binary) {
  if (maxval == 0 || maxval > 65535) throw InvalidArgument("PGM maxval must be in [1, 65535]");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << (binary ? "P5" : "P2") << '\n' << img.cols() << ' ' << img.rows() << '\n' << maxval
      << '\n';
  auto quantize = [maxval](double v) {
    if (!std::isfinite(v)) v = 0.0;
    return static_cast<unsigned>(std::clamp(std::round(v), 0.0, static_cast<double>(maxval)));
  };
  if (binary) {
    const bool wide = maxval > 255;
    std::vector<unsigned char> raw;
    raw.reserve(img.size() * (wide ? 2 : 1));
    for (double v : img.pixels()) {
      const unsigned q = quantize(v);
      if (wide) raw.push_back(static_cast<unsigned char>(q >> 8));
      raw.push_back(static_cast<unsigned char>(q & 0xFF));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  } else {
    for (std::size_t r = 0; r < img.rows(); ++r) {
      for (std::size_t c = 0; c < img.cols(); ++c) {
        out << quantize(img(r, c)) << (c + 1 == img.cols() ? '\n' : ' ');
      }
    }
  }
  if (!out) fail(path, "write failed");
}

Image parse_float_grid(std::istream& in, const std::string& source_name) {
  const std::filesystem::path path(source_name);
  std::size_t line_no = 0;
  std::string line;
  std::size_t rows = 0, cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream hs(line);
    long long r = 0, c = 0;
    if (!(hs >> r >> c) || r <= 0 || c <= 0) fail(path, "expected header 'rows cols'", line_no);
    std::string extra;
    if (hs >> extra) fail(path, "unexpected token '" + extra + "' after header", line_no);
    rows = static_cast<std::size_t>(r);
    cols = static_cast<std::size_t>(c);
    break;
  }
  if (rows == 0) fail(path, "missing header");

  std::vector<double> px;
  px.reserve(rows * cols);
  while (std::getline(in, line)) {
    ++line_no;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (;;) {
      while (p < end && std::isspace(static_cast<unsigned char>(*p))) ++p;
      if (p == end) break;
      const char* tok_end = p;
      while (tok_end < end && !std::isspace(static_cast<unsigned char>(*tok_end))) ++tok_end;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p, tok_end, v);
      if (ec != std::errc() || ptr != tok_end) {
        fail(path, "invalid number '" + std::string(p, tok_end) + "'", line_no);
      }
      if (!std::isfinite(v)) fail(path, "non-finite value '" + std::string(p, tok_end) + "'", line_no);
      if (px.size() == rows * cols) fail(path, "more values than rows*cols", line_no);
      px.push_back(v);
      p = tok_end;
    }
  }
  if (px.size() != rows * cols) {
    fail(path, "expected " + std::to_string(rows * cols) + " values, found " +
                   std::to_string(px.size()),
         line_no);
  }
  return Image(rows, cols, std::move(px));
}

void format_float_grid(const Image& img, std::ostream& out) {
  out << img.rows() << ' ' << img.cols() << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t r = 0; r < img.rows(); ++r) {
    for (std::size_t c = 0; c < img.cols(); ++c) {
      out << img(r, c) << (c + 1 == img.cols() ? '\n' : ' ');
    }
  }
}

Image read_float_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open for reading");
  return parse_float_grid(in, path.string());
}

void write_float_grid(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open for writing");
  format_float_grid(img, out);
  if (!out) fail(path, "write failed");
}

Image read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  in.close();
  if (magic[0] == 'P' && (magic[1] == '2' || magic[1] == '5')) return read_pgm(path);
  return read_float_grid(path);
}

void write_image(const Image& img, const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".pgm") {
    const double mx = img.empty() ? 0.0 : img.max_value();
    write_pgm(img, path, mx > 255.5 ? 65535u : 255u);
  } else {
    write_float_grid(img, path);
  }
}

}  // namespace spda
