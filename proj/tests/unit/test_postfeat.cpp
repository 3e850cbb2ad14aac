#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <map>
#include <random>
#include <sstream>

#include "contro/error.hpp"
#include "contro/postfeat.hpp"
#include "contro/text.hpp"

using namespace contro;

namespace {

/// Cyclic Jacobi eigen-decomposition; returns (eigenvalues, eigenvectors as columns).
std::pair<std::vector<double>, Eigen::MatrixXd> jacobi_eigen(Eigen::MatrixXd a) {
  const auto n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::fabs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
  return {ev, v};
}

EmbeddingTable small_table() {
  EmbeddingTable t(2, "test");
  std::vector<double> a{1, 0}, b{0, 2}, c{3, 4};
  t.add("a", a);
  t.add("b", b);
  t.add("c", c);
  return t;
}

}  // namespace

TEST_CASE("tokenizer lowercases and splits on punctuation") {
  CHECK(text::tokenize("Hello, World! it's 'quoted'") ==
        std::vector<std::string>{"hello", "world", "it's", "quoted"});
  CHECK(text::tokenize("").empty());
  CHECK(text::ngrams({"a", "b", "c"}, 2) == std::vector<std::string>{"a", "b", "c", "a b", "b c"});
  CHECK(text::count_sentences("One. Two!! Three") == 3);
  CHECK(text::count_sentences("...") == 0);
  CHECK(text::count_syllables("make") == 1);
  CHECK(text::count_syllables("the") == 1);
  CHECK(text::count_syllables("banana") == 3);
}

TEST_CASE("field features of a question title") {
  auto lex = Lexicons::pronouns_only();
  auto h = hand_features("Why? Why?", "", lex);
  CHECK(h.title.length == 2);
  CHECK(h.title.type_token_ratio == doctest::Approx(0.5));
  CHECK(h.title.rate_question_marks == doctest::Approx(2.0 / 9.0));
  CHECK(h.title.rate_capitalized_chars == doctest::Approx(2.0 / 9.0));
  CHECK(h.n_sentences == 2);
  CHECK(h.body.length == 0);
}

TEST_CASE("type-token ratio and pronoun rates") {
  auto lex = Lexicons::pronouns_only();
  auto h = hand_features("a b a", "I told you my plan", lex);
  CHECK(h.title.type_token_ratio == doctest::Approx(2.0 / 3.0));
  CHECK(h.body.rate_first_person == doctest::Approx(2.0 / 5.0));
  CHECK(h.body.rate_second_person == doctest::Approx(1.0 / 5.0));
}

TEST_CASE("links, markup and lists") {
  auto lex = Lexicons::pronouns_only();
  auto h = hand_features("t", "see https://www.reddit.com/r/x and http://i.imgur.com/a.png\n- item\n**bold** *it*",
                         lex);
  CHECK(h.n_links == 2);
  CHECK(h.n_reddit_links == 1);
  CHECK(h.n_imgur_links == 1);
  CHECK(h.has_list == 1);
  CHECK(h.rate_bold > 0);
  CHECK(h.rate_italics > 0);
  auto plain = hand_features("t", "no list - here", lex);
  CHECK(plain.has_list == 0);
  CHECK(plain.n_links == 0);
}

TEST_CASE("sentiment averages lexicon weights over hits") {
  auto lex = Lexicons::pronouns_only();
  lex.sentiment = {{"good", 2.0}, {"bad", -1.0}};
  auto h = hand_features("good bad bad other", "", lex);
  CHECK(h.title.sentiment == doctest::Approx(0.0));
  auto g = hand_features("good good", "", lex);
  CHECK(g.title.sentiment == doctest::Approx(2.0));
}

TEST_CASE("readability follows the grade formula") {
  // 6 words, 2 sentences, 6 syllables
  CHECK(flesch_kincaid_grade("The cat sat. The dog ran.") == doctest::Approx(0.39 * 3 + 11.8 * 1 - 15.59));
  // banana = 3 syllables, 1 word, 1 sentence
  CHECK(flesch_kincaid_grade("banana") == doctest::Approx(0.39 + 11.8 * 3 - 15.59));
  CHECK(flesch_kincaid_grade("") == 0.0);
}

TEST_CASE("hand feature vector and names line up") {
  auto lex = default_lexicons();
  CHECK(lex.wordlists.size() >= 20);
  CHECK_FALSE(lex.sentiment.empty());
  auto h = hand_features("A title", "A body", lex);
  CHECK(h.to_vector().size() == hand_feature_names(lex).size());
}

TEST_CASE("tfidf matches a direct computation") {
  std::vector<std::vector<std::string>> docs = {{"x", "x", "y"}, {"x", "z"}, {"y", "y", "w"}};
  auto m = TfidfModel::fit(docs, 1);
  CHECK(m.vocabulary() == std::vector<std::string>{"x", "y"});
  std::vector<std::string> q{"x", "y", "y", "z"};
  auto v = m.transform(q);
  // idf = ln((1+N)/(1+df)) + 1 with N = 3, df(x) = 2, df(y) = 2
  const double idf = std::log(4.0 / 3.0) + 1.0;
  double a = 1 * idf, b = 2 * idf;
  const double norm = std::sqrt(a * a + b * b);
  CHECK(v[0] == doctest::Approx(a / norm));
  CHECK(v[1] == doctest::Approx(b / norm));
  std::vector<std::string> none{"q"};
  auto zero = m.transform(none);
  CHECK(zero == std::vector<double>{0.0, 0.0});
  TfidfModel unfitted;
  CHECK_THROWS_AS(unfitted.transform(q), std::logic_error);
}

TEST_CASE("tfidf vectors are unit length on random corpora") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> tok(0, 30);
  std::vector<std::vector<std::string>> docs(50);
  for (auto& d : docs)
    for (int i = 0; i < 20; ++i) d.push_back("t" + std::to_string(tok(rng)));
  auto m = TfidfModel::fit(docs);
  for (const auto& d : docs) {
    auto v = m.transform(d);
    double n = 0;
    for (double x : v) n += x * x;
    CHECK(std::sqrt(n) == doctest::Approx(1.0));
  }
}

TEST_CASE("embed_doc averages the prefix and normalizes") {
  auto t = small_table();
  std::vector<std::string> toks{"a", "zz", "b", "c"};
  auto v = embed_doc(toks, t, 3);
  REQUIRE(v.has_value());
  const double n = std::sqrt(0.25 + 1.0);
  CHECK((*v)[0] == doctest::Approx(0.5 / n));
  CHECK((*v)[1] == doctest::Approx(1.0 / n));
  std::vector<std::string> unknown{"zz"};
  CHECK_FALSE(embed_doc(unknown, t, 10).has_value());
  CHECK_FALSE(embed_doc(toks, t, 0).has_value());
}

TEST_CASE("SIF weights are a over a plus frequency") {
  auto t = small_table();
  std::vector<std::vector<std::string>> docs = {{"a", "a", "a", "b"}};
  auto freqs = estimate_word_freqs(docs);
  CHECK(freqs.prob.at("a") == doctest::Approx(0.75));
  std::vector<std::string> q{"a", "b"};
  auto v = sif_embed(q, t, freqs, 0.25);
  const double wa = 0.25 / (0.25 + 0.75), wb = 0.25 / (0.25 + 0.25);
  CHECK((*v)[0] == doctest::Approx(wa * 1.0 / 2.0));
  CHECK((*v)[1] == doctest::Approx(wb * 2.0 / 2.0));
  CHECK_THROWS_AS(sif_embed(q, t, freqs, 0.0), std::invalid_argument);
}

TEST_CASE("SIF model removes the common direction") {
  auto t = small_table();
  std::vector<std::vector<std::string>> docs = {{"a", "c"}, {"b", "c"}, {"c"}, {"a", "b", "c"}};
  auto m = SifModel::fit(docs, t);
  const auto& u = m.common_component();
  CHECK(u[0] * u[0] + u[1] * u[1] == doctest::Approx(1.0));
  for (const auto& d : docs) {
    auto v = m.transform(d, t);
    CHECK((*v)[0] * u[0] + (*v)[1] * u[1] == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("embedding files round trip and reject bad input") {
  auto t = small_table();
  std::stringstream ss;
  write_embeddings(ss, t);
  auto back = read_embeddings(ss, "mem");
  CHECK(back.size() == 3);
  CHECK((*back.find("c"))[1] == 4.0);
  std::istringstream bad_header("3\n");
  CHECK_THROWS_AS(read_embeddings(bad_header, "x"), DataError);
  std::istringstream short_row("1 2\na 1\n");
  CHECK_THROWS_AS(read_embeddings(short_row, "x"), DataError);
  std::istringstream wrong_count("2 1\na 1\n");
  CHECK_THROWS_AS(read_embeddings(wrong_count, "x"), DataError);
}

TEST_CASE("document vectors parse id rows") {
  std::istringstream in("c1,1,2\nc2,3,4\n");
  auto dv = read_document_vectors(in);
  CHECK(dv.dim() == 2);
  CHECK(dv.find("c2") == std::optional<std::vector<double>>(std::vector<double>{3, 4}));
  std::istringstream bad("c1,1,2\nc2,3\n");
  CHECK_THROWS_AS(read_document_vectors(bad), DataError);
}

TEST_CASE("PCA matches a Jacobi eigen-decomposition") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 40, d = 6;
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) x(i, j) = g(rng) * (j + 1);
    auto p = pca_fit(x, 3);

    Eigen::VectorXd mean = x.colwise().mean();
    Eigen::MatrixXd c = x.rowwise() - mean.transpose();
    Eigen::MatrixXd cov = c.transpose() * c / (n - 1);
    auto [ev, vecs] = jacobi_eigen(cov);
    std::vector<int> order(d);
    for (int i = 0; i < d; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return ev[a] > ev[b]; });
    for (int k = 0; k < 3; ++k) {
      CHECK(p.eigenvalues(k) == doctest::Approx(ev[order[k]]).epsilon(1e-9));
      Eigen::VectorXd u = vecs.col(order[k]);
      Eigen::Index arg = 0;
      u.cwiseAbs().maxCoeff(&arg);
      if (u(arg) < 0) u = -u;
      CHECK((p.components.row(k).transpose() - u).norm() < 1e-8);
    }
    auto y = pca_apply(p, x.row(0).transpose());
    CHECK(y.size() == 3);
  }
  Eigen::MatrixXd one(1, 2);
  CHECK_THROWS_AS(pca_fit(one, 1), std::invalid_argument);
  Eigen::MatrixXd two(2, 2);
  CHECK_THROWS_AS(pca_fit(two, 3), std::invalid_argument);
}

TEST_CASE("calendar parts agree with gmtime") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::int64_t> ts(0, 4'000'000'000LL);
  for (int rep = 0; rep < 2000; ++rep) {
    const std::int64_t t = ts(rng);
    std::time_t tt = static_cast<std::time_t>(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    auto c = utc_calendar(t);
    CHECK(c.year == tm.tm_year + 1900);
    CHECK(c.month == static_cast<unsigned>(tm.tm_mon + 1));
    CHECK(c.hour == static_cast<unsigned>(tm.tm_hour));
    CHECK(c.weekday == static_cast<unsigned>((tm.tm_wday + 6) % 7));
  }
}

TEST_CASE("time encoder one-hot blocks") {
  std::vector<Timestamp> train{1325376000, 1388534399};  // 2012-01-01, 2013-12-31
  auto enc = TimeEncoder::fit(train);
  CHECK(enc.min_year() == 2012);
  CHECK(enc.max_year() == 2013);
  CHECK(enc.size() == 2 + 12 + 7 + 24);
  CHECK(enc.names().size() == enc.size());
  auto v = enc.transform(1325376000);  // Sunday 00:00
  double ones = 0;
  for (double x : v) ones += x;
  CHECK(ones == 4);
  CHECK(v[0] == 1);
  CHECK(v[2] == 1);            // January
  CHECK(v[2 + 12 + 6] == 1);   // Sunday
  CHECK(v[2 + 12 + 7] == 1);   // hour 0
  auto later = enc.transform(1420070400);  // 2015: year block empty
  CHECK(later[0] + later[1] == 0);
}

TEST_CASE("author encoder keeps frequent training authors") {
  std::vector<std::optional<std::string>> a{"x", "x", "x", "y", std::nullopt, "y", "z", "y"};
  auto enc = AuthorEncoder::fit(a, 3);
  CHECK(enc.authors() == std::vector<std::string>{"x", "y"});
  CHECK(enc.transform(std::string("y")) == std::vector<double>{0, 1});
  CHECK(enc.transform(std::nullopt) == std::vector<double>{0, 0});
  CHECK(enc.transform(std::string("z")) == std::vector<double>{0, 0});
}

TEST_CASE("fightin words matches the log-odds formula") {
  std::vector<std::string> a{"cat cat dog"};
  std::vector<std::string> b{"dog dog bird"};
  auto s = fightin_words(a, b, 1, 10.0);
  std::map<std::string, NgramScore> by;
  for (const auto& x : s) by[x.ngram] = x;
  // pooled counts cat 2, dog 3, bird 1; n_a = n_b = 3
  const double alpha_cat = 10.0 * 2 / 6;
  const double ya = 2 + alpha_cat, yb = 0 + alpha_cat;
  const double delta = std::log(ya / (3 + 10 - ya)) - std::log(yb / (3 + 10 - yb));
  CHECK(by["cat"].delta == doctest::Approx(delta));
  CHECK(by["cat"].z == doctest::Approx(delta / std::sqrt(1 / ya + 1 / yb)));
  CHECK(s.front().ngram == "cat");
  CHECK(s.back().ngram == "bird");
}

TEST_CASE("fightin words is antisymmetric") {
  std::vector<std::string> a{"the red fox jumps", "red red sky"};
  std::vector<std::string> b{"the blue fox sleeps", "blue sky"};
  auto ab = fightin_words(a, b);
  auto ba = fightin_words(b, a);
  std::map<std::string, double> z;
  for (const auto& x : ab) z[x.ngram] = x.z;
  for (const auto& x : ba) CHECK(x.z == doctest::Approx(-z[x.ngram]).epsilon(1e-12));
  std::vector<std::string> empty;
  CHECK_THROWS_AS(fightin_words(a, empty), std::invalid_argument);
  CHECK_THROWS_AS(fightin_words(a, b, 0), std::invalid_argument);
}
