#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mfrnet/common.hpp"
#include "mfrnet/frame.hpp"

namespace mfrnet {

// Raw planar YUV, frame-sequential, no header. 8-bit content uses one byte
// per sample, 10-bit uses two bytes little-endian (low 10 bits valid).

inline std::size_t frame_bytes(int width, int height, int bit_depth,
                               ChromaFormat chroma) {
  const std::size_t luma = static_cast<std::size_t>(width) * height;
  const std::size_t chroma_plane =
      chroma == ChromaFormat::k420
          ? static_cast<std::size_t>((width + 1) / 2) * ((height + 1) / 2)
          : luma;
  return (luma + 2 * chroma_plane) * (bit_depth > 8 ? 2 : 1);
}

namespace detail {

inline void read_plane(std::istream& in, std::vector<std::uint16_t>& plane,
                       int bit_depth) {
  if (bit_depth > 8) {
    std::vector<unsigned char> raw(plane.size() * 2);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    for (std::size_t i = 0; i < plane.size(); ++i) {
      plane[i] = static_cast<std::uint16_t>(raw[2 * i] |
                                            (raw[2 * i + 1] << 8));
    }
  } else {
    std::vector<unsigned char> raw(plane.size());
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = raw[i];
  }
}

inline void write_plane(std::ostream& out,
                        const std::vector<std::uint16_t>& plane,
                        int bit_depth) {
  if (bit_depth > 8) {
    std::vector<unsigned char> raw(plane.size() * 2);
    for (std::size_t i = 0; i < plane.size(); ++i) {
      raw[2 * i] = static_cast<unsigned char>(plane[i] & 0xFF);
      raw[2 * i + 1] = static_cast<unsigned char>(plane[i] >> 8);
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
  } else {
    std::vector<unsigned char> raw(plane.size());
    for (std::size_t i = 0; i < plane.size(); ++i) {
      raw[i] = static_cast<unsigned char>(plane[i] & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
  }
}

}  // namespace detail

class YuvReader {
 public:
  YuvReader(const std::string& path, int width, int height, int bit_depth,
            ChromaFormat chroma)
      : in_(path, std::ios::binary),
        width_(width),
        height_(height),
        bit_depth_(bit_depth),
        chroma_(chroma),
        path_(path) {
    if (!in_) throw IoError("cannot open YUV file: " + path);
    in_.seekg(0, std::ios::end);
    file_size_ = static_cast<std::size_t>(in_.tellg());
    in_.seekg(0);
    const std::size_t fb = frame_bytes(width, height, bit_depth, chroma);
    if (file_size_ % fb != 0) {
      throw IoError("YUV file size " + std::to_string(file_size_) +
                    " is not a multiple of the frame size " +
                    std::to_string(fb) + ": " + path);
    }
  }

  int frame_count() const {
    return static_cast<int>(file_size_ /
                            frame_bytes(width_, height_, bit_depth_, chroma_));
  }

  std::optional<Frame> next() {
    if (frames_read_ >= frame_count()) return std::nullopt;
    Frame f = Frame::allocate(width_, height_, bit_depth_, chroma_);
    detail::read_plane(in_, f.y, bit_depth_);
    detail::read_plane(in_, f.cb, bit_depth_);
    detail::read_plane(in_, f.cr, bit_depth_);
    if (!in_) throw IoError("short read from YUV file: " + path_);
    ++frames_read_;
    return f;
  }

 private:
  std::ifstream in_;
  int width_, height_, bit_depth_;
  ChromaFormat chroma_;
  std::string path_;
  std::size_t file_size_ = 0;
  int frames_read_ = 0;
};

class YuvWriter {
 public:
  explicit YuvWriter(const std::string& path)
      : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw IoError("cannot open YUV file for writing: " + path);
  }

  void write(const Frame& f) {
    detail::write_plane(out_, f.y, f.bit_depth);
    detail::write_plane(out_, f.cb, f.bit_depth);
    detail::write_plane(out_, f.cr, f.bit_depth);
    if (!out_) throw IoError("failed writing YUV file: " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
};

// Minimal Y4M support for 8-bit 4:2:0 / 4:4:4 content.

struct Y4mHeader {
  int width = 0;
  int height = 0;
  int fps_num = 25;
  int fps_den = 1;
  ChromaFormat chroma = ChromaFormat::k420;
};

class Y4mReader {
 public:
  explicit Y4mReader(const std::string& path)
      : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open Y4M file: " + path);
    std::string line;
    if (!std::getline(in_, line)) {
      throw IoError("Y4M file has no stream header: " + path);
    }
    std::istringstream hs(line);
    std::string token;
    hs >> token;
    if (token != "YUV4MPEG2") {
      throw IoError("not a Y4M stream (bad signature): " + path);
    }
    bool have_w = false, have_h = false;
    while (hs >> token) {
      if (token.size() < 2) continue;
      const char tag = token[0];
      const std::string v = token.substr(1);
      switch (tag) {
        case 'W':
          header_.width = std::stoi(v);
          have_w = true;
          break;
        case 'H':
          header_.height = std::stoi(v);
          have_h = true;
          break;
        case 'F': {
          const auto colon = v.find(':');
          if (colon != std::string::npos) {
            header_.fps_num = std::stoi(v.substr(0, colon));
            header_.fps_den = std::stoi(v.substr(colon + 1));
          }
          break;
        }
        case 'C':
          if (v == "444") {
            header_.chroma = ChromaFormat::k444;
          } else if (v == "420" || v == "420jpeg" || v == "420mpeg2" ||
                     v == "420paldv") {
            header_.chroma = ChromaFormat::k420;
          } else {
            throw IoError("unsupported Y4M colour space C" + v + ": " + path);
          }
          break;
        default:
          break;  // interlace/aspect/extension tags are accepted and ignored
      }
    }
    if (!have_w || !have_h) {
      throw IoError("Y4M header is missing geometry: " + path);
    }
  }

  const Y4mHeader& header() const { return header_; }

  std::optional<Frame> next() {
    std::string line;
    if (!std::getline(in_, line)) return std::nullopt;
    if (line.rfind("FRAME", 0) != 0) {
      throw IoError("malformed Y4M frame marker: " + path_);
    }
    Frame f = Frame::allocate(header_.width, header_.height, 8,
                              header_.chroma);
    detail::read_plane(in_, f.y, 8);
    detail::read_plane(in_, f.cb, 8);
    detail::read_plane(in_, f.cr, 8);
    if (!in_) throw IoError("short read from Y4M file: " + path_);
    return f;
  }

 private:
  std::ifstream in_;
  std::string path_;
  Y4mHeader header_;
};

class Y4mWriter {
 public:
  Y4mWriter(const std::string& path, const Y4mHeader& header)
      : out_(path, std::ios::binary), path_(path), header_(header) {
    if (!out_) throw IoError("cannot open Y4M file for writing: " + path);
    out_ << "YUV4MPEG2 W" << header.width << " H" << header.height << " F"
         << header.fps_num << ":" << header.fps_den << " Ip A1:1 C"
         << (header.chroma == ChromaFormat::k444 ? "444" : "420jpeg")
         << "\n";
  }

  void write(const Frame& f) {
    check(f.bit_depth == 8, "Y4M output supports 8-bit content only");
    check(f.width == header_.width && f.height == header_.height &&
              f.chroma == header_.chroma,
          "frame does not match Y4M stream header");
    out_ << "FRAME\n";
    detail::write_plane(out_, f.y, 8);
    detail::write_plane(out_, f.cb, 8);
    detail::write_plane(out_, f.cr, 8);
    if (!out_) throw IoError("failed writing Y4M file: " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
  Y4mHeader header_;
};

}  // namespace mfrnet
