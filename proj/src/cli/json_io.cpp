#include "json_io.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

namespace occlqg::cli {

Json matrix_json(const Matrix& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

namespace {

bool is_flat(const Json& j) {
  return std::none_of(j.begin(), j.end(), [](const Json& e) { return e.is_structured(); });
}

void write(const Json& j, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  const std::string inner(static_cast<std::size_t>(indent + 2), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (const auto& [key, value] : j.items()) {
      if (!first) out += ",\n";
      first = false;
      out += inner + Json(key).dump() + ": ";
      write(value, indent + 2, out);
    }
    out += "\n" + pad + "}";
  } else if (j.is_array()) {
    if (is_flat(j)) {
      out += "[";
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k) out += ", ";
        out += j[k].dump();
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t k = 0; k < j.size(); ++k) {
      if (k) out += ",\n";
      out += inner;
      write(j[k], indent + 2, out);
    }
    out += "\n" + pad + "]";
  } else {
    out += j.dump();
  }
}

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace

std::string pretty_json(const Json& j) {
  std::string out;
  write(j, 0, out);
  out += "\n";
  return out;
}

std::map<std::string, std::pair<int, int>> value_positions(std::string_view text) {
  struct Frame {
    bool array = false;
    bool expect_key = false;
    int index = 0;
    std::string key;
    std::string pointer;
  };
  std::map<std::string, std::pair<int, int>> out;
  std::vector<Frame> stack;
  int line = 1, col = 1;
  auto current = [&] {
    if (stack.empty()) return std::string();
    const Frame& f = stack.back();
    return f.pointer + "/" + (f.array ? std::to_string(f.index) : escape_token(f.key));
  };
  auto advance = [&](std::size_t& i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++i;
  };
  for (std::size_t i = 0; i < text.size();) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == ':') {
      advance(i);
    } else if (c == ',') {
      if (!stack.empty()) {
        if (stack.back().array) {
          ++stack.back().index;
        } else {
          stack.back().expect_key = true;
        }
      }
      advance(i);
    } else if (c == '{' || c == '[') {
      const std::string ptr = current();
      out.emplace(ptr, std::make_pair(line, col));
      stack.push_back({c == '[', c == '{', 0, {}, ptr});
      advance(i);
    } else if (c == '}' || c == ']') {
      if (!stack.empty()) stack.pop_back();
      advance(i);
    } else if (c == '"') {
      const auto pos = std::make_pair(line, col);
      std::string s;
      advance(i);
      while (i < text.size() && text[i] != '"') {
        if (text[i] == '\\' && i + 1 < text.size()) {
          s += text[i];
          advance(i);
        }
        s += text[i];
        advance(i);
      }
      if (i < text.size()) advance(i);
      if (!stack.empty() && !stack.back().array && stack.back().expect_key) {
        stack.back().key = Json::parse("\"" + s + "\"").get<std::string>();
        stack.back().expect_key = false;
      } else {
        out.emplace(current(), pos);
      }
    } else {
      out.emplace(current(), std::make_pair(line, col));
      while (i < text.size() && text[i] != ',' && text[i] != ']' && text[i] != '}' &&
             !std::isspace(static_cast<unsigned char>(text[i]))) {
        advance(i);
      }
    }
  }
  return out;
}

}  // namespace occlqg::cli
