#include "presence/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <unordered_set>

#include "presence/text_util.hpp"

namespace presence {

WeightVector::WeightVector(std::vector<std::pair<std::string, double>> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) fail(ErrorCode::invalid_argument, "weight vector is empty");
  double sum = 0.0;
  std::set<std::string> seen;
  for (const auto& [name, w] : weights_) {
    if (!(w >= 0.0) || w > 1.0) {
      fail(ErrorCode::invalid_argument, "weight for '" + name + "' outside [0,1]");
    }
    if (!seen.insert(name).second) {
      fail(ErrorCode::invalid_argument, "measure '" + name + "' weighted twice");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "weights sum to " << sum << ", expected 1";
    fail(ErrorCode::invalid_argument, msg.str());
  }
}

WeightVector WeightVector::normalized(std::vector<std::pair<std::string, double>> weights) {
  double sum = 0.0;
  for (const auto& [name, w] : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      fail(ErrorCode::invalid_argument, "weight for '" + name + "' must be non-negative");
    }
    sum += w;
  }
  if (!(sum > 0.0)) fail(ErrorCode::invalid_argument, "weights sum to zero");
  for (auto& [name, w] : weights) w /= sum;
  return WeightVector(std::move(weights));
}

double d_web(const LocationRegistry& registry, const LocationId& a, const LocationId& b,
             std::span<const SimilarityMeasure> measures, const WeightVector& weights) {
  const auto& la = registry.at(a);
  const auto& lb = registry.at(b);
  if (weights.entries().size() != measures.size()) {
    fail(ErrorCode::invalid_argument, "weights must cover exactly the supplied measures");
  }
  double total = 0.0;
  for (const auto& [name, w] : weights.entries()) {
    auto it = std::find_if(measures.begin(), measures.end(),
                           [&](const SimilarityMeasure& m) { return m.name == name; });
    if (it == measures.end()) fail(ErrorCode::invalid_argument, "unknown measure '" + name + "'");
    if (w == 0.0) continue;
    total += w * std::clamp(it->evaluate(la, lb), 0.0, 1.0);
  }
  return std::clamp(total, 0.0, 1.0);
}

namespace {

// Decodes one code point; malformed sequences yield U+FFFD and consume one byte.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const int c = cont(static_cast<std::size_t>(k));
    if (c < 0) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_word(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  }
  if (cp <= 0xBF || cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
  if (cp >= 0xFFF0 && cp <= 0xFFFF) return false;  // specials, incl. U+FFFD
  if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;  // emoji and pictographs
  return true;
}

char32_t fold_case(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if (((cp >= 0x100 && cp <= 0x137) || (cp >= 0x14A && cp <= 0x177)) && cp % 2 == 0) {
    return cp + 1;
  }
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  return cp;
}

std::vector<std::string> shingles(std::span<const std::string> tokens, std::size_t len) {
  std::vector<std::string> out;
  if (tokens.empty()) return out;
  const std::size_t width = std::min(len, tokens.size());
  for (std::size_t i = 0; i + width <= tokens.size(); ++i) {
    std::string s;
    for (std::size_t k = 0; k < width; ++k) {
      if (k) s += '\x1f';
      s += tokens[i + k];
    }
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool is_ip_literal(std::string_view host) {
  if (!host.empty() && host.front() == '[') return true;
  return std::all_of(host.begin(), host.end(),
                     [](char c) { return (c >= '0' && c <= '9') || c == '.'; });
}

}  // namespace

std::vector<std::string> tokenize(std::string_view utf8) {
  std::vector<std::string> out;
  std::string current;
  std::size_t i = 0;
  while (i < utf8.size()) {
    const char32_t cp = next_code_point(utf8, i);
    if (is_word(cp)) {
      append_utf8(current, fold_case(cp));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

double shingle_jaccard(std::span<const std::string> a, std::span<const std::string> b,
                       std::size_t shingle_len) {
  if (shingle_len < 1) fail(ErrorCode::invalid_argument, "shingle length must be >= 1");
  const auto sa = shingles(a, shingle_len);
  const auto sb = shingles(b, shingle_len);
  if (sa.empty() && sb.empty()) return 1.0;
  if (sa.empty() || sb.empty()) return 0.0;
  std::size_t common = 0;
  auto ia = sa.begin();
  auto ib = sb.begin();
  while (ia != sa.end() && ib != sb.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = sa.size() + sb.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

std::string registrable_domain(std::string_view host) {
  std::string h = ascii_lower(host);
  while (!h.empty() && h.back() == '.') h.pop_back();
  if (h.empty()) fail(ErrorCode::invalid_argument, "cannot derive a domain from an empty host");
  if (is_ip_literal(h)) return h;
  auto labels = split(h, '.');
  if (std::any_of(labels.begin(), labels.end(), [](auto l) { return l.empty(); })) {
    fail(ErrorCode::invalid_argument, "unparsable host '" + std::string(host) + "'");
  }
  if (labels.size() <= 2) return h;
  static const std::set<std::string_view> generic_second_level = {
      "ac", "co", "com", "edu", "go", "gov", "ltd", "ne", "net", "or", "org", "plc"};
  std::size_t keep = 2;
  if (labels.back().size() == 2 && generic_second_level.count(labels[labels.size() - 2])) keep = 3;
  keep = std::min(keep, labels.size());
  std::string out;
  for (std::size_t i = labels.size() - keep; i < labels.size(); ++i) {
    if (!out.empty()) out += '.';
    out += labels[i];
  }
  return out;
}

double domain_equality(const VirtualLocation& a, const VirtualLocation& b) {
  auto domains = [](const VirtualLocation& loc) {
    std::set<std::string> out;
    for (const auto& c : loc.coordinates) {
      if (c.host().empty()) {
        fail(ErrorCode::invalid_argument, "coordinate '" + c.str() + "' has no host");
      }
      out.insert(registrable_domain(c.host()));
    }
    return out;
  };
  const auto da = domains(a);
  const auto db = domains(b);
  for (const auto& d : da) {
    if (db.count(d)) return 1.0;
  }
  return 0.0;
}

void LocationCorpus::set(const LocationId& id, std::string_view text) {
  tokens_.insert_or_assign(id, tokenize(text));
}

const std::vector<std::string>* LocationCorpus::tokens(const LocationId& id) const {
  auto it = tokens_.find(id);
  return it == tokens_.end() ? nullptr : &it->second;
}

LocationCorpus LocationCorpus::load_directory(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    fail(ErrorCode::io, "corpus directory '" + dir.string() + "' does not exist");
  }
  LocationCorpus corpus;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot read '" + entry.path().string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    corpus.set(LocationId(entry.path().stem().string()), text.str());
  }
  return corpus;
}

SimilarityMeasure shingle_measure(std::shared_ptr<const LocationCorpus> corpus,
                                  std::size_t shingle_len) {
  if (shingle_len < 1) fail(ErrorCode::invalid_argument, "shingle length must be >= 1");
  return {"shingle",
          [corpus = std::move(corpus), shingle_len](const VirtualLocation& a,
                                                    const VirtualLocation& b) {
            if (a.id == b.id) return 1.0;
            const auto* ta = corpus->tokens(a.id);
            const auto* tb = corpus->tokens(b.id);
            // No content on either side: nothing to compare.
            if (!ta || !tb) return 0.0;
            return shingle_jaccard(*ta, *tb, shingle_len);
          }};
}

SimilarityMeasure domain_measure() { return {"domain", &domain_equality}; }

SimilarityTable::SimilarityTable(const SimilarityTable& other) {
  std::shared_lock lock(other.mutex_);
  provider_ = other.provider_;
  explicit_ = other.explicit_;
  cache_ = other.cache_;
}

SimilarityTable& SimilarityTable::operator=(const SimilarityTable& other) {
  if (this == &other) return *this;
  SimilarityTable copy(other);
  std::unique_lock lock(mutex_);
  provider_ = std::move(copy.provider_);
  explicit_ = std::move(copy.explicit_);
  cache_ = std::move(copy.cache_);
  return *this;
}

SimilarityTable SimilarityTable::from_measures(std::shared_ptr<const LocationRegistry> registry,
                                               std::vector<SimilarityMeasure> measures,
                                               WeightVector weights) {
  // Validate the configuration once up front rather than on first lookup.
  if (weights.entries().size() != measures.size()) {
    fail(ErrorCode::invalid_argument, "weights must cover exactly the supplied measures");
  }
  for (const auto& [name, w] : weights.entries()) {
    if (std::none_of(measures.begin(), measures.end(),
                     [&](const auto& m) { return m.name == name; })) {
      fail(ErrorCode::invalid_argument, "unknown measure '" + name + "'");
    }
  }
  return SimilarityTable([registry = std::move(registry), measures = std::move(measures),
                          weights = std::move(weights)](const LocationId& a, const LocationId& b) {
    return d_web(*registry, a, b, measures, weights);
  });
}

SimilarityTable::Pair SimilarityTable::key(const LocationId& a, const LocationId& b) {
  return a < b ? Pair{a, b} : Pair{b, a};
}

void SimilarityTable::set(const LocationId& a, const LocationId& b, double closeness) {
  if (!(closeness >= 0.0 && closeness <= 1.0)) {
    fail(ErrorCode::invalid_argument, "closeness must lie in [0,1]");
  }
  if (a == b) {
    if (closeness != 1.0) fail(ErrorCode::invalid_argument, "self-closeness must be 1");
    return;
  }
  std::unique_lock lock(mutex_);
  explicit_.insert_or_assign(key(a, b), closeness);
}

double SimilarityTable::get(const LocationId& a, const LocationId& b) const {
  if (a == b) return 1.0;
  const auto k = key(a, b);
  {
    std::shared_lock lock(mutex_);
    if (auto it = explicit_.find(k); it != explicit_.end()) return it->second;
    if (auto it = cache_.find(k); it != cache_.end()) return it->second;
    if (!provider_) return 0.0;
  }
  const double value = std::clamp(provider_(k.first, k.second), 0.0, 1.0);
  std::unique_lock lock(mutex_);
  cache_.emplace(k, value);
  return value;
}

std::map<SimilarityTable::Pair, double> SimilarityTable::entries() const {
  std::shared_lock lock(mutex_);
  auto out = cache_;
  for (const auto& [k, v] : explicit_) out.insert_or_assign(k, v);
  return out;
}

}  // namespace presence
