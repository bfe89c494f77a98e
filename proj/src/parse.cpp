#include "qsdkit/errors.hpp"
#include "qsdkit/network.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace qsdkit {
namespace {

struct RawTerm {
  std::int64_t coefficient;
  std::string species;
};

struct RawRate {
  double alpha = 0.0;
  bool power = false;
  std::vector<double> exponents;
  std::size_t column = 0;
};

struct RawReaction {
  std::vector<RawTerm> source;
  std::vector<RawTerm> product;
  RawRate rate;
  std::size_t line = 0;
  std::size_t column = 0;
};

class Cursor {
 public:
  Cursor(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }
  bool done() {
    skip_ws();
    return pos_ >= text_.size();
  }
  std::size_t column() const { return pos_ + 1; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_, column()); }
  [[noreturn]] void fail_at(const std::string& what, std::size_t col) const {
    throw ParseError(what, line_, col);
  }

  bool accept(std::string_view token) {
    skip_ws();
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }
  void expect(std::string_view token) {
    if (!accept(token)) fail("expected '" + std::string(token) + "'");
  }

  bool peek_digit() {
    skip_ws();
    return pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]));
  }
  bool peek_ident() {
    skip_ws();
    return pos_ < text_.size() &&
           (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_');
  }

  std::string identifier() {
    if (!peek_ident()) fail("expected species name");
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::int64_t integer() {
    if (!peek_digit()) fail("expected integer");
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc()) fail("integer out of range");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  double decimal() {
    skip_ws();
    const char* begin = text_.data() + pos_;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, text_.data() + text_.size(), value);
    if (ec != std::errc() || ptr == begin) fail("expected decimal number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

 private:
  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

std::vector<RawTerm> parse_complex(Cursor& cur) {
  std::vector<RawTerm> terms;
  if (cur.peek_digit()) {
    std::size_t col = cur.column();
    std::int64_t c = cur.integer();
    if (c == 0 && !cur.peek_ident()) return terms;
    if (c == 0) cur.fail_at("zero coefficient", col);
    if (c > kMaxCoefficient) cur.fail_at("coefficient exceeds 255", col);
    terms.push_back({c, cur.identifier()});
  } else {
    terms.push_back({1, cur.identifier()});
  }
  while (cur.accept("+")) {
    std::int64_t c = 1;
    std::size_t col = cur.column();
    if (cur.peek_digit()) {
      c = cur.integer();
      if (c == 0) cur.fail_at("zero coefficient", col);
      if (c > kMaxCoefficient) cur.fail_at("coefficient exceeds 255", col);
    }
    terms.push_back({c, cur.identifier()});
  }
  return terms;
}

RawRate parse_rate(Cursor& cur) {
  RawRate rate;
  cur.skip_ws();
  rate.column = cur.column();
  if (cur.accept("power")) {
    cur.expect("(");
    rate.power = true;
    rate.alpha = cur.decimal();
    cur.expect(";");
    rate.exponents.push_back(cur.decimal());
    while (cur.accept(",")) rate.exponents.push_back(cur.decimal());
    cur.expect(")");
  } else {
    rate.alpha = cur.decimal();
  }
  if (!(rate.alpha > 0.0)) cur.fail_at("rate constant must be positive", rate.column);
  for (double e : rate.exponents)
    if (!(e >= 0.0)) cur.fail_at("power law exponents must be nonnegative", rate.column);
  return rate;
}

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

ReactionNetwork parse_network(std::string_view text) {
  std::optional<std::vector<std::string>> header;
  std::vector<std::string> order;
  std::map<std::string, int> index;
  std::vector<RawReaction> raw;

  auto intern = [&](const std::string& name, Cursor& cur, std::size_t col) {
    if (index.count(name)) return;
    if (header) cur.fail_at("unknown species '" + name + "'", col);
    index[name] = static_cast<int>(order.size());
    order.push_back(name);
  };

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = strip(line);
    Cursor cur(line, line_no);
    if (cur.done()) continue;

    if (cur.accept("species:")) {
      if (header) cur.fail("duplicate species header");
      if (!raw.empty()) cur.fail("species header must precede reactions");
      header.emplace();
      do {
        std::size_t col = cur.column();
        std::string name = cur.identifier();
        if (index.count(name)) cur.fail_at("duplicate species '" + name + "'", col);
        index[name] = static_cast<int>(header->size());
        header->push_back(name);
      } while (cur.accept(","));
      if (!cur.done()) cur.fail("unexpected trailing input");
      if (header->size() > static_cast<std::size_t>(kMaxSpecies))
        cur.fail_at("at most 16 species are supported", 1);
      order = *header;
      continue;
    }

    cur.accept("reaction:");
    cur.skip_ws();
    RawReaction rx;
    rx.line = line_no;
    rx.column = cur.column();
    rx.source = parse_complex(cur);
    bool reversible = false;
    if (cur.accept("<->")) {
      reversible = true;
    } else {
      cur.expect("->");
    }
    rx.product = parse_complex(cur);
    cur.expect("@");
    rx.rate = parse_rate(cur);
    std::optional<RawRate> backward;
    if (reversible) {
      cur.expect(",");
      backward = parse_rate(cur);
    }
    if (!cur.done()) cur.fail("unexpected trailing input");

    for (auto* side : {&rx.source, &rx.product})
      for (const auto& term : *side) intern(term.species, cur, rx.column);
    if (order.size() > static_cast<std::size_t>(kMaxSpecies))
      cur.fail_at("at most 16 species are supported", rx.column);

    raw.push_back(rx);
    if (backward) {
      RawReaction back = rx;
      std::swap(back.source, back.product);
      back.rate = *backward;
      raw.push_back(back);
    }
  }

  if (raw.empty()) throw ParseError("no reactions", line_no, 1);

  const auto d = static_cast<Eigen::Index>(order.size());
  auto to_complex = [&](const std::vector<RawTerm>& terms, const RawReaction& rx) {
    Complex c = Complex::Zero(d);
    for (const auto& t : terms) {
      c[index.at(t.species)] += t.coefficient;
      if (c[index.at(t.species)] > kMaxCoefficient)
        throw ParseError("coefficient exceeds 255", rx.line, rx.column);
    }
    return c;
  };

  std::vector<Reaction> reactions;
  for (const auto& rx : raw) {
    Reaction out{to_complex(rx.source, rx), to_complex(rx.product, rx), MassAction{rx.rate.alpha}};
    if (out.source == out.product)
      throw ParseError("irreflexive violation: source equals product", rx.line, rx.column);
    if (rx.rate.power) {
      if (static_cast<Eigen::Index>(rx.rate.exponents.size()) != d)
        throw ParseError("power law needs " + std::to_string(d) + " exponents", rx.line,
                         rx.rate.column);
      PowerLaw pl{rx.rate.alpha, Eigen::VectorXd(d)};
      for (Eigen::Index i = 0; i < d; ++i) {
        pl.exponents[i] = rx.rate.exponents[static_cast<std::size_t>(i)];
        if (pl.exponents[i] > 0.0 && out.source[i] == 0)
          throw ParseError("power law exponent on '" + order[static_cast<std::size_t>(i)] +
                               "' needs that species in the source complex",
                           rx.line, rx.rate.column);
      }
      out.rate = pl;
    }
    reactions.push_back(std::move(out));
  }

  try {
    return ReactionNetwork(order, std::move(reactions));
  } catch (const PreconditionError& e) {
    throw ParseError(e.what(), line_no, 1);
  }
}

ReactionNetwork load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_network(buf.str());
}

namespace {

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string format_complex(const ReactionNetwork& net, const Complex& c) {
  std::string out;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (c[i] == 0) continue;
    if (!out.empty()) out += " + ";
    if (c[i] != 1) out += std::to_string(c[i]) + " ";
    out += net.species()[static_cast<std::size_t>(i)].name;
  }
  return out.empty() ? "0" : out;
}

}  // namespace

std::string format_network(const ReactionNetwork& net) {
  std::string out = "species: ";
  for (int i = 0; i < net.d(); ++i) {
    if (i) out += ", ";
    out += net.species()[static_cast<std::size_t>(i)].name;
  }
  out += "\n";
  for (const Reaction& rx : net.reactions()) {
    out += "reaction: " + format_complex(net, rx.source) + " -> " + format_complex(net, rx.product) +
           " @ ";
    if (const auto* pl = std::get_if<PowerLaw>(&rx.rate)) {
      out += "power(" + format_real(pl->alpha) + ";";
      for (Eigen::Index i = 0; i < pl->exponents.size(); ++i)
        out += (i ? ", " : " ") + format_real(pl->exponents[i]);
      out += ")";
    } else {
      out += format_real(rate_constant(rx.rate));
    }
    out += "\n";
  }
  return out;
}

}  // namespace qsdkit
