#include "mvt/calibration_file.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mvt/error.hpp"
#include "mvt/io.hpp"

namespace mvt {

namespace {

std::string toml_float(double v) {
  std::string s = io::format_double(v);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string toml_array(std::initializer_list<double> values) {
  std::string s = "[";
  bool first = true;
  for (double v : values) {
    s += first ? " " : ", ";
    s += toml_float(v);
    first = false;
  }
  return s + " ]";
}

std::string toml_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

// Minimal TOML reader: tables, bare or quoted keys, strings, numbers,
// booleans and (nested, multi-line) arrays.
struct Value {
  enum class Kind { String, Number, Bool, Array } kind = Kind::Number;
  std::string text;
  double number = 0.0;
  bool boolean = false;
  std::vector<Value> items;
};

using Table = std::map<std::string, Value>;

class Parser {
 public:
  Parser(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  std::map<std::string, Table> parse() {
    std::map<std::string, Table> tables;
    std::string current;
    tables[current];
    while (true) {
      skip_blank(true);
      if (at_end()) break;
      if (peek() == '[') {
        ++pos_;
        const auto close = text_.find(']', pos_);
        const auto nl = text_.find('\n', pos_);
        if (close == std::string_view::npos || (nl != std::string_view::npos && close > nl)) error("unterminated table header");
        current = io::trim(text_.substr(pos_, close - pos_));
        if (current.empty()) error("empty table name");
        if (tables.count(current) && current_defined_.count(current)) error("duplicate table [" + current + "]");
        current_defined_.insert(current);
        tables[current];
        pos_ = close + 1;
        expect_line_end();
        continue;
      }
      const std::string key = parse_key();
      skip_blank(false);
      if (at_end() || peek() != '=') error("expected '=' after key '" + key + "'");
      ++pos_;
      skip_blank(false);
      Value v = parse_value();
      if (tables[current].count(key)) error("duplicate key '" + key + "'");
      tables[current][key] = std::move(v);
      expect_line_end();
    }
    return tables;
  }

 private:
  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorCode::ParseError, source_ + ":" + std::to_string(line_) + ": " + msg);
  }
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  void skip_blank(bool newlines) {
    while (!at_end()) {
      const char c = peek();
      if (c == '#') {
        while (!at_end() && peek() != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
      } else if (c == '\n' && newlines) {
        ++line_;
        ++pos_;
      } else {
        break;
      }
    }
  }

  void expect_line_end() {
    skip_blank(false);
    if (at_end()) return;
    if (peek() != '\n') error("unexpected trailing characters");
    ++line_;
    ++pos_;
  }

  std::string parse_key() {
    if (peek() == '"') return parse_string();
    const auto start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (pos_ == start) error("expected a key");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string parse_string() {
    ++pos_;  // opening quote
    std::string out;
    while (true) {
      if (at_end() || peek() == '\n') error("unterminated string");
      const char c = text_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (at_end()) error("unterminated escape");
        const char e = text_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: error(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  Value parse_value() {
    if (at_end()) error("missing value");
    Value v;
    const char c = peek();
    if (c == '"') {
      v.kind = Value::Kind::String;
      v.text = parse_string();
    } else if (c == '[') {
      v.kind = Value::Kind::Array;
      ++pos_;
      while (true) {
        skip_blank(true);
        if (at_end()) error("unterminated array");
        if (peek() == ']') {
          ++pos_;
          break;
        }
        v.items.push_back(parse_value());
        skip_blank(true);
        if (at_end()) error("unterminated array");
        if (peek() == ',') {
          ++pos_;
        } else if (peek() != ']') {
          error("expected ',' or ']' in array");
        }
      }
    } else {
      const auto start = pos_;
      while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || std::string_view("+-._").find(peek()) != std::string_view::npos))
        ++pos_;
      std::string token(text_.substr(start, pos_ - start));
      if (token.empty()) error("unexpected character '" + std::string(1, c) + "'");
      if (token == "true" || token == "false") {
        v.kind = Value::Kind::Bool;
        v.boolean = token == "true";
      } else {
        token.erase(std::remove(token.begin(), token.end(), '_'), token.end());
        v.kind = Value::Kind::Number;
        try {
          v.number = io::parse_double(token);
        } catch (const Error&) {
          error("invalid value '" + token + "'");
        }
      }
    }
    return v;
  }

  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::set<std::string> current_defined_;
};

const Value& require(const Table& table, const std::string& table_name, const std::string& key) {
  const auto it = table.find(key);
  if (it == table.end()) fail(ErrorCode::SchemaError, table_name + "." + key);
  return it->second;
}

std::vector<double> numbers(const Value& v, const std::string& where, std::size_t expected) {
  if (v.kind != Value::Kind::Array) fail(ErrorCode::SchemaError, where + ": expected an array");
  std::vector<double> out;
  for (const auto& item : v.items) {
    if (item.kind != Value::Kind::Number) fail(ErrorCode::SchemaError, where + ": expected numbers");
    out.push_back(item.number);
  }
  if (out.size() != expected)
    fail(ErrorCode::SchemaError, where + ": expected " + std::to_string(expected) + " values, found " +
                                     std::to_string(out.size()));
  return out;
}

double number(const Table& table, const std::string& table_name, const std::string& key, double fallback) {
  const auto it = table.find(key);
  if (it == table.end()) return fallback;
  if (it->second.kind != Value::Kind::Number) fail(ErrorCode::SchemaError, table_name + "." + key + ": expected a number");
  return it->second.number;
}

}  // namespace

std::string format_calibration(const CalibrationResult& result) {
  std::string out;
  for (std::size_t i = 0; i < result.rig.cameras.size(); ++i) {
    const auto& cam = result.rig.cameras[i];
    const auto& k = cam.intrinsics;
    const auto& e = cam.extrinsics;
    out += "[cam_" + std::to_string(i) + "]\n";
    out += "name = " + toml_string(cam.name) + "\n";
    out += "size = [ " + std::to_string(k.width) + ", " + std::to_string(k.height) + " ]\n";
    out += "matrix = [ " + toml_array({k.fx, 0.0, k.cx}) + ", " + toml_array({0.0, k.fy, k.cy}) + ", " +
           toml_array({0.0, 0.0, 1.0}) + " ]\n";
    out += "distortions = " + toml_array({k.dist[0], k.dist[1], k.dist[2], k.dist[3], k.dist[4]}) + "\n";
    out += "rotation = " + toml_array({e.rotvec.x(), e.rotvec.y(), e.rotvec.z()}) + "\n";
    out += "translation = " + toml_array({e.tvec.x(), e.tvec.y(), e.tvec.z()}) + "\n\n";
  }
  out += "[metadata]\n";
  out += "rms_error_px = " + toml_float(result.rms_error_px) + "\n";
  out += "unit_scale = " + toml_float(result.rig.unit_scale) + "\n";
  out += "distortion_model = \"brown_conrady_5\"\n";
  out += "rms_definition = \"sqrt(mean(|reprojection residual|^2)) over all corners\"\n";
  return out;
}

void write_calibration(const CalibrationResult& result, const std::filesystem::path& path) {
  io::write_text(path, format_calibration(result));
}

CalibrationResult parse_calibration(std::string_view text, const std::string& source_name) {
  const auto tables = Parser(text, source_name).parse();

  std::vector<std::pair<long long, std::string>> cams;
  for (const auto& [name, table] : tables) {
    if (name.rfind("cam_", 0) != 0) continue;
    try {
      cams.emplace_back(io::parse_int(name.substr(4)), name);
    } catch (const Error&) {
      fail(ErrorCode::SchemaError, name + ": camera tables must be named cam_<index>");
    }
  }
  std::sort(cams.begin(), cams.end());
  if (cams.empty()) fail(ErrorCode::SchemaError, "cam_0");

  CalibrationResult result;
  for (const auto& [index, tname] : cams) {
    const Table& t = tables.at(tname);
    Camera cam;
    const Value& name = require(t, tname, "name");
    if (name.kind != Value::Kind::String) fail(ErrorCode::SchemaError, tname + ".name: expected a string");
    cam.name = name.text;
    const auto size = numbers(require(t, tname, "size"), tname + ".size", 2);
    const Value& mat = require(t, tname, "matrix");
    if (mat.kind != Value::Kind::Array || mat.items.size() != 3)
      fail(ErrorCode::SchemaError, tname + ".matrix: expected a 3x3 nested array");
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < 3; ++r) rows.push_back(numbers(mat.items[r], tname + ".matrix", 3));
    const auto dist = numbers(require(t, tname, "distortions"), tname + ".distortions", 5);
    const auto rot = numbers(require(t, tname, "rotation"), tname + ".rotation", 3);
    const auto trans = numbers(require(t, tname, "translation"), tname + ".translation", 3);

    cam.intrinsics.fx = rows[0][0];
    cam.intrinsics.cx = rows[0][2];
    cam.intrinsics.fy = rows[1][1];
    cam.intrinsics.cy = rows[1][2];
    std::copy(dist.begin(), dist.end(), cam.intrinsics.dist.begin());
    cam.intrinsics.width = static_cast<int>(size[0]);
    cam.intrinsics.height = static_cast<int>(size[1]);
    cam.extrinsics.rotvec = Vec3(rot[0], rot[1], rot[2]);
    cam.extrinsics.tvec = Vec3(trans[0], trans[1], trans[2]);
    result.rig.cameras.push_back(std::move(cam));
  }
  if (const auto it = tables.find("metadata"); it != tables.end()) {
    result.rms_error_px = number(it->second, "metadata", "rms_error_px", 0.0);
    result.rig.unit_scale = number(it->second, "metadata", "unit_scale", 1.0);
  }
  try {
    result.rig.validate();
  } catch (const Error& e) {
    fail(ErrorCode::SchemaError, e.what());
  }
  return result;
}

CalibrationResult read_calibration_result(const std::filesystem::path& path) {
  return parse_calibration(io::read_text(path), path.string());
}

CameraRig read_calibration(const std::filesystem::path& path) { return read_calibration_result(path).rig; }

}  // namespace mvt
