// Image container: a stand-in for a stripped executable.
//
//   "DIMG" then any number of sections, each
//   name length u8 | name | size u32 LE | bytes
//
// A build writes ".text" (synthetic machine words), ".model" (the laid-out
// program model) and ".layout" (function order and layout options). The
// Δdata travels in an extra ".dbpd" section appended by Embed.

#ifndef DELTAPAD_IMAGE_H_
#define DELTAPAD_IMAGE_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "deltapad/layout.h"
#include "deltapad/progmodel.h"

namespace deltapad {

inline constexpr std::string_view kDeltaSectionName = ".dbpd";
// Section record overhead for ".dbpd": name length, name, size.
inline constexpr size_t kEmbedOverhead = 1 + kDeltaSectionName.size() + 4;

struct ImageSection {
  std::string name;
  std::vector<uint8_t> bytes;

  bool operator==(const ImageSection&) const = default;
};

struct Image {
  std::vector<ImageSection> sections;

  const ImageSection* Find(std::string_view name) const;
  bool operator==(const Image&) const = default;
};

std::vector<uint8_t> SerializeImage(const Image& image);
// Throws Error(kBadMagic) or Error(kParse).
Image ParseImage(const std::vector<uint8_t>& bytes);

Image MakeImage(const ProgramModel& laid_out_model, const LayoutResult& layout);

// Rebuilds the model and layout stored in an image.
struct LoadedImage {
  ProgramModel model;
  LayoutResult layout;
};
LoadedImage LoadImage(const Image& image);

// Appends a ".dbpd" section; the existing bytes are left untouched.
std::vector<uint8_t> Embed(const std::vector<uint8_t>& image_bytes,
                           const std::vector<uint8_t>& dd_bytes);
// Contents of the last ".dbpd" section; throws Error(kInput) if none.
std::vector<uint8_t> Extract(const std::vector<uint8_t>& image_bytes);

}  // namespace deltapad

#endif  // DELTAPAD_IMAGE_H_
