#include "deltapad/image.h"

#include <cstring>

#include "deltapad/error.h"
#include "text_util.h"

namespace deltapad {

namespace {

constexpr char kImageMagic[4] = {'D', 'I', 'M', 'G'};

std::vector<uint8_t> ToBytes(std::string_view s) {
  return std::vector<uint8_t>(s.begin(), s.end());
}

std::string_view AsText(const std::vector<uint8_t>& b) {
  return std::string_view(reinterpret_cast<const char*>(b.data()), b.size());
}

void AppendSection(std::vector<uint8_t>& out, std::string_view name,
                   const std::vector<uint8_t>& bytes) {
  if (name.empty() || name.size() > 255) {
    throw Error(ErrorKind::kSerialize, "section name must be 1..255 bytes");
  }
  if (bytes.size() > 0xffffffffu) {
    throw Error(ErrorKind::kSerialize, "section larger than 4 GiB");
  }
  out.push_back(static_cast<uint8_t>(name.size()));
  out.insert(out.end(), name.begin(), name.end());
  const uint32_t size = static_cast<uint32_t>(bytes.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(size >> (8 * i)));
  out.insert(out.end(), bytes.begin(), bytes.end());
}

}  // namespace

const ImageSection* Image::Find(std::string_view name) const {
  const ImageSection* found = nullptr;
  for (const ImageSection& s : sections) {
    if (s.name == name) found = &s;
  }
  return found;
}

std::vector<uint8_t> SerializeImage(const Image& image) {
  std::vector<uint8_t> out(kImageMagic, kImageMagic + 4);
  for (const ImageSection& s : image.sections) AppendSection(out, s.name, s.bytes);
  return out;
}

Image ParseImage(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kImageMagic, 4) != 0) {
    throw Error(ErrorKind::kBadMagic, "not an image container");
  }
  Image image;
  size_t p = 4;
  while (p < bytes.size()) {
    const size_t name_len = bytes[p++];
    if (name_len == 0 || bytes.size() - p < name_len + 4) {
      throw Error(ErrorKind::kParse, "truncated section header");
    }
    ImageSection s;
    s.name.assign(reinterpret_cast<const char*>(&bytes[p]), name_len);
    p += name_len;
    uint32_t size = 0;
    for (int i = 0; i < 4; ++i) size |= uint32_t{bytes[p + i]} << (8 * i);
    p += 4;
    if (bytes.size() - p < size) {
      throw Error(ErrorKind::kParse, "section " + s.name + " is truncated");
    }
    s.bytes.assign(bytes.begin() + p, bytes.begin() + p + size);
    p += size;
    image.sections.push_back(std::move(s));
  }
  return image;
}

Image MakeImage(const ProgramModel& laid_out_model, const LayoutResult& layout) {
  std::string layout_text = "LAYOUT 1\nBASE " + Hex(layout.options.base_address) +
                            "\nSP_FP_OPT " + (layout.options.sp_fp_opt ? "1" : "0") +
                            "\nORDER";
  for (size_t i : layout.order) layout_text += " " + std::to_string(i);
  layout_text += "\n";
  Image image;
  image.sections.push_back(ImageSection{".text", RenderText(laid_out_model, layout)});
  image.sections.push_back(ImageSection{".model", ToBytes(EmitModel(laid_out_model))});
  image.sections.push_back(ImageSection{".layout", ToBytes(layout_text)});
  return image;
}

LoadedImage LoadImage(const Image& image) {
  const ImageSection* model = image.Find(".model");
  const ImageSection* layout = image.Find(".layout");
  if (!model || !layout) {
    throw Error(ErrorKind::kInput, "image lacks .model or .layout");
  }
  LoadedImage out;
  out.model = ParseModel(AsText(model->bytes));
  LayoutOptions options;
  std::vector<size_t> order;
  bool have_base = false, have_order = false, have_opt = false;
  for (std::string_view line : internal::SplitLines(AsText(layout->bytes))) {
    std::vector<std::string_view> w = internal::SplitWords(line);
    if (w.empty() || w[0] == "LAYOUT") continue;
    if (w[0] == "BASE" && w.size() == 2 && ParseHex(w[1], &options.base_address)) {
      have_base = true;
    } else if (w[0] == "SP_FP_OPT" && w.size() == 2 && (w[1] == "0" || w[1] == "1")) {
      options.sp_fp_opt = w[1] == "1";
      have_opt = true;
    } else if (w[0] == "ORDER") {
      for (size_t k = 1; k < w.size(); ++k) {
        uint64_t v;
        if (!internal::ParseUint(w[k], &v)) {
          throw Error(ErrorKind::kParse, "bad ORDER entry in .layout");
        }
        order.push_back(static_cast<size_t>(v));
      }
      have_order = true;
    } else {
      throw Error(ErrorKind::kParse, "bad .layout line '" + std::string(line) + "'");
    }
  }
  if (!have_base || !have_order || !have_opt) {
    throw Error(ErrorKind::kParse, ".layout needs BASE, SP_FP_OPT and ORDER");
  }
  out.layout = Layout(out.model, order, options);
  return out;
}

std::vector<uint8_t> Embed(const std::vector<uint8_t>& image_bytes,
                           const std::vector<uint8_t>& dd_bytes) {
  ParseImage(image_bytes);
  std::vector<uint8_t> out = image_bytes;
  AppendSection(out, kDeltaSectionName, dd_bytes);
  return out;
}

std::vector<uint8_t> Extract(const std::vector<uint8_t>& image_bytes) {
  const Image image = ParseImage(image_bytes);
  const ImageSection* s = image.Find(kDeltaSectionName);
  if (!s) throw Error(ErrorKind::kInput, "image carries no .dbpd section");
  return s->bytes;
}

}  // namespace deltapad
