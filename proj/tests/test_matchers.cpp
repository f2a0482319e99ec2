#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "stepsalt/errors.hpp"
#include "stepsalt/matchers.hpp"

using namespace stepsalt;

namespace {

MatchConfig flags(bool ws, bool fold) {
  MatchConfig c;
  c.normalize_whitespace = ws;
  c.case_fold = fold;
  return c;
}

double norm(const TextVector& v) {
  double s = 0.0;
  for (double x : v.values) s += x * x;
  return std::sqrt(s);
}

// Cosine of two bags of tokens computed from raw token counts, valid when no
// two distinct tokens share an embedding bucket.
double count_cosine(const std::string& a, const std::string& b) {
  auto counts = [](const std::string& s) {
    std::map<std::string, double> c;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) c[tok] += 1.0;
    return c;
  };
  const auto ca = counts(a), cb = counts(b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [k, v] : ca) {
    na += v * v;
    if (auto it = cb.find(k); it != cb.end()) dot += v * it->second;
  }
  for (const auto& [k, v] : cb) nb += v * v;
  return dot / std::sqrt(na * nb);
}

bool buckets_distinct(const std::string& text) {
  std::istringstream in(text);
  std::string tok;
  std::map<std::size_t, std::string> seen;
  while (in >> tok) {
    const TextVector v = embed(tok);
    std::size_t bucket = 0;
    while (v.values[bucket] == 0.0) ++bucket;
    auto [it, inserted] = seen.emplace(bucket, tok);
    if (!inserted && it->second != tok) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("canonicalize examples") {
  CHECK(canonicalize("go  to fridge 1", flags(true, false)) == "go to fridge 1");
  CHECK(canonicalize("Open Cabinet", flags(false, true)) == "open cabinet");
  CHECK(canonicalize("x", flags(false, false)) == "x");
  CHECK(canonicalize("  \t a \n b  ", flags(true, false)) == "a b");
  CHECK(canonicalize("Open Cabinet", MatchConfig{}) == "Open Cabinet");
}

TEST_CASE("canonicalize is idempotent") {
  std::mt19937_64 gen(5);
  const std::string alphabet = "aB \t\nZz1 ";
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    for (std::size_t k = gen() % 20; k > 0; --k) s.push_back(alphabet[gen() % alphabet.size()]);
    for (bool ws : {false, true})
      for (bool fold : {false, true}) {
        const auto cfg = flags(ws, fold);
        const auto once = canonicalize(s, cfg);
        CHECK(canonicalize(once, cfg) == once);
      }
  }
}

TEST_CASE("embed examples") {
  CHECK(embed("").is_zero());
  CHECK(embed("   ").is_zero());
  CHECK(embed("open the fridge") == embed("open the fridge"));
  CHECK(embed("a b") == embed("b a"));
  CHECK(norm(embed("heat cup 2 with microwave 1")) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("embed has unit norm for every non-empty text") {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::string s;
    for (std::size_t k = 1 + gen() % 12; k > 0; --k) s += "tok" + std::to_string(gen() % 30) + " ";
    CHECK(std::abs(norm(embed(s)) - 1.0) <= 1e-9);
  }
}

TEST_CASE("bag-of-tokens order invariance by direct construction") {
  // Same multiset of tokens in a different order gives the identical count
  // vector, hence the identical normalized vector.
  const std::string a = "take the red apple from the table";
  const std::string b = "table the from apple red the take";
  CHECK(embed(a) == embed(b));
}

TEST_CASE("similar examples") {
  const TextVector v = embed("go to countertop 1");
  CHECK(similar(v, v, 0.8));
  CHECK(similar(v, v, 1.0));
  TextVector e1, e2;
  e1.values[0] = 1.0;
  e2.values[1] = 1.0;
  CHECK_FALSE(similar(e1, e2, 0.8));
  CHECK(similar(TextVector{}, TextVector{}, 0.8));
  CHECK_FALSE(similar(TextVector{}, v, 0.8));
}

TEST_CASE("texts sharing 9 of 10 tokens are similar at 0.8") {
  const std::string a = "you arrive at countertop one and see a red mug";
  const std::string b = "you arrive at countertop one and see a blue mug";
  REQUIRE(buckets_distinct(a + " " + b));
  const double expected = count_cosine(a, b);  // 9 / 10
  CHECK(expected == doctest::Approx(0.9));
  CHECK(cosine(embed(a), embed(b)) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(similar(embed(a), embed(b), 0.8));
}

TEST_CASE("similarity uses a strict threshold") {
  const std::string a = "alpha beta gamma delta";
  const std::string b = "alpha beta gamma epsilon";
  REQUIRE(buckets_distinct(a + " " + b));
  const double c = cosine(embed(a), embed(b));
  CHECK(c == doctest::Approx(0.75));
  CHECK(similar(embed(a), embed(b), c - 1e-12));
  CHECK_FALSE(similar(embed(a), embed(b), c));
}

TEST_CASE("texts_equivalent dispatches on mode") {
  const MatchConfig exact;
  CHECK(texts_equivalent("open cabinet 1", "open cabinet 1", exact));
  CHECK_FALSE(texts_equivalent("open cabinet 1", "open cabinet 2", exact));
  CHECK(texts_equivalent("open  cabinet 1 ", "open cabinet 1", exact));

  // Long paraphrase: 18 of 19 tokens shared, one substituted.
  const std::string a =
      "you arrive at the kitchen counter where you notice a mug a spoon a plate and a small bowl near the window";
  const std::string b =
      "you arrive at the kitchen counter where you notice a cup a spoon a plate and a small bowl near the window";
  REQUIRE(buckets_distinct(a + " " + b));
  const double oracle = count_cosine(a, b);
  CHECK(oracle > 0.8);
  CHECK(cosine(embed(a), embed(b)) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(texts_equivalent(a, b, MatchConfig::embed(0.8)));
  CHECK_FALSE(texts_equivalent(a, b, exact));
  CHECK_FALSE(texts_equivalent("open drawer", "close window", MatchConfig::embed(0.8)));
}

TEST_CASE("separate action threshold") {
  MatchConfig cfg = MatchConfig::embed(0.95);
  cfg.action_threshold = 0.7;
  const std::string a = "alpha beta gamma delta", b = "alpha beta gamma epsilon";  // cos 0.75
  CHECK(texts_equivalent(a, b, cfg, TextRole::Action));
  CHECK_FALSE(texts_equivalent(a, b, cfg, TextRole::State));
}

TEST_CASE("exact mode is an equivalence relation") {
  const std::vector<std::string> texts = {"a b", "a  b", " a b", "A b", "a c", ""};
  const MatchConfig cfg;
  for (const auto& x : texts) {
    CHECK(texts_equivalent(x, x, cfg));
    for (const auto& y : texts) {
      CHECK(texts_equivalent(x, y, cfg) == texts_equivalent(y, x, cfg));
      for (const auto& z : texts)
        if (texts_equivalent(x, y, cfg) && texts_equivalent(y, z, cfg)) CHECK(texts_equivalent(x, z, cfg));
    }
  }
}

TEST_CASE("embed mode is reflexive and symmetric") {
  const std::vector<std::string> texts = {"go to desk 1", "go to desk 2", "open desk 1", "", "desk"};
  const auto cfg = MatchConfig::embed(0.5);
  for (const auto& x : texts) {
    CHECK(texts_equivalent(x, x, cfg));
    for (const auto& y : texts) CHECK(texts_equivalent(x, y, cfg) == texts_equivalent(y, x, cfg));
  }
}

TEST_CASE("match config validation") {
  MatchConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.cosine_threshold = 0.8;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.mode = MatchMode::Embed;
  CHECK_NOTHROW(cfg.validate());
  cfg.cosine_threshold.reset();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.cosine_threshold = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.cosine_threshold = 1.0;
  CHECK_NOTHROW(cfg.validate());
  CHECK(parse_match_mode("embed") == MatchMode::Embed);
  CHECK_THROWS_AS(parse_match_mode("fuzzy"), ConfigError);
}
