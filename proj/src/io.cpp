#include "causeprobe/io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "causeprobe/error.hpp"

namespace causeprobe::io {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

json parse_json(std::string_view text, const std::string& source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character.
    const std::size_t offset = e.byte == 0 ? 0 : std::min<std::size_t>(e.byte - 1, text.size());
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t k = 0; k < offset; ++k) {
      if (text[k] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string what = e.what();
    if (auto pos = what.find("parse error"); pos != std::string::npos) what = what.substr(pos);
    throw ParseError(source, line, column, what);
  }
}

json load_json(const std::filesystem::path& path) {
  return parse_json(read_file(path), path.string());
}

void reject_unknown_fields(const json& object, std::initializer_list<std::string_view> allowed,
                           const std::string& context) {
  if (!object.is_object()) throw ValidationError(context + ": expected an object");
  for (const auto& item : object.items()) {
    const bool known = std::find(allowed.begin(), allowed.end(), item.key()) != allowed.end();
    if (!known) throw ValidationError(context + ": unknown field '" + item.key() + "'");
  }
}

const json& require(const json& object, std::string_view key, const std::string& context) {
  if (!object.is_object()) throw ValidationError(context + ": expected an object");
  auto it = object.find(key);
  if (it == object.end()) {
    throw ValidationError(context + ": missing field '" + std::string(key) + "'");
  }
  return *it;
}

std::string require_string(const json& object, std::string_view key, const std::string& context) {
  const json& v = require(object, key, context);
  if (!v.is_string()) {
    throw ValidationError(context + ": field '" + std::string(key) + "' must be a string");
  }
  return v.get<std::string>();
}

std::string dump_pretty(const json& value) { return value.dump(2) + "\n"; }

std::string escape_field(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(std::string_view escaped) {
  std::string out;
  out.reserve(escaped.size());
  for (std::size_t k = 0; k < escaped.size(); ++k) {
    char c = escaped[k];
    if (c != '\\' || k + 1 == escaped.size()) {
      out += c;
      continue;
    }
    switch (escaped[++k]) {
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case '\\': out += '\\'; break;
      default:
        out += '\\';
        out += escaped[k];
    }
  }
  return out;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace causeprobe::io
