#include "hypflow/spec_grammar.hpp"

#include <cctype>
#include <charconv>
#include <variant>

#include "hypflow/errors.hpp"

namespace hypflow::symfunc {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  CurvatureFunctionSpec parse_all() {
    CurvatureFunctionSpec spec = parse_spec();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return spec;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError("spec parse error at column " + std::to_string(pos_ + 1) + ": " + why +
                      " in '" + std::string(text_) + "'");
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string_view identifier() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) ||
                                   text_[pos_] == '_'))
      ++pos_;
    if (start == pos_) fail("expected identifier");
    return text_.substr(start, pos_ - start);
  }

  template <typename T>
  T number() {
    skip_ws();
    T value{};
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr == first) fail("expected number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  void keyword_arg(std::string_view name) {
    if (identifier() != name) fail("expected argument '" + std::string(name) + "'");
    expect('=');
  }

  CurvatureFunctionSpec parse_spec() {
    const std::size_t start = pos_;
    const std::string_view head = identifier();
    expect('(');
    try {
      if (head == "powermean") {
        keyword_arg("r");
        const double r = number<double>();
        expect(')');
        return CurvatureFunctionSpec::power_mean(r);
      }
      if (head == "sigma") {
        keyword_arg("k");
        const int k = number<int>();
        expect(')');
        return CurvatureFunctionSpec::sigma(k);
      }
      if (head == "blend") {
        std::vector<BlendTerm> terms;
        for (;;) {
          CurvatureFunctionSpec inner = parse_spec();
          expect(':');
          const double w = number<double>();
          terms.push_back({std::move(inner), w});
          skip_ws();
          if (pos_ < text_.size() && text_[pos_] == ',') {
            ++pos_;
            continue;
          }
          break;
        }
        expect(')');
        return CurvatureFunctionSpec::blend(std::move(terms));
      }
    } catch (const ConfigError& e) {
      if (std::string_view(e.what()).starts_with("spec parse error")) throw;
      pos_ = start;
      fail(e.what());
    }
    pos_ = start;
    fail("unknown speed '" + std::string(head) + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

}  // namespace

CurvatureFunctionSpec parse_spec(std::string_view text) { return Parser(text).parse_all(); }

std::string to_string(const CurvatureFunctionSpec& spec) {
  return std::visit(
      [](const auto& kind) -> std::string {
        using T = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<T, PowerMean>) {
          return "powermean(r=" + format_double(kind.exponent) + ")";
        } else if constexpr (std::is_same_v<T, ElementarySymRoot>) {
          return "sigma(k=" + std::to_string(kind.order) + ")";
        } else {
          std::string out = "blend(";
          for (std::size_t i = 0; i < kind.terms.size(); ++i) {
            if (i) out += ",";
            out += to_string(kind.terms[i].spec) + ":" + format_double(kind.terms[i].weight);
          }
          return out + ")";
        }
      },
      spec.kind());
}

}  // namespace hypflow::symfunc
