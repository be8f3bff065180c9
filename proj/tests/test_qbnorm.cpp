#include <doctest.h>

#include "qbnorm/qbnorm.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>

using namespace qbnorm;
using testing::vec;

namespace {

RowMatrixXd rows(std::initializer_list<std::initializer_list<double>> values) {
  RowMatrixXd m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : values) {
    Eigen::Index c = 0;
    for (double v : r) m(i, c++) = v;
    ++i;
  }
  return m;
}

NormaliserConfig config(Method m, double beta = 20.0, std::size_t k = 1, std::size_t big_k = 10) {
  NormaliserConfig cfg;
  cfg.method = m;
  cfg.beta = beta;
  cfg.k_activation = k;
  cfg.k_csls = big_k;
  return cfg;
}

std::set<Index> as_set(const std::vector<Index>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("method names round trip") {
  for (Method m : {Method::none, Method::gc, Method::csls, Method::is, Method::dis}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_method("cent"), ArgumentError);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(config(Method::is, 0.0).validate(), ArgumentError);
  CHECK_THROWS_AS(config(Method::is, -1.0).validate(), ArgumentError);
  CHECK_THROWS_AS(config(Method::is, std::nan("")).validate(), ArgumentError);
  CHECK_THROWS_AS(config(Method::dis, 1.0, 0).validate(), ArgumentError);
  CHECK_NOTHROW(config(Method::dis).validate());
  const NormaliserConfig defaults;
  CHECK(defaults.beta == 20.0);
  CHECK(defaults.k_activation == 1);
  CHECK(defaults.k_csls == 10);
}

TEST_CASE("build_probe worked example") {
  const auto bank = testing::matrix({{1, 0}}, "b");
  const auto gallery = testing::matrix({{1, 0}, {0, 1}}, "g");
  const auto p = build_probe(bank, gallery, config(Method::gc, 20.0, 1, 1));
  REQUIRE(p.has_probe());
  CHECK(p.probe.rows() == 2);
  CHECK(p.probe.cols() == 1);
  CHECK(p.probe(0, 0) == 1.0);
  CHECK(p.probe(1, 0) == 0.0);
  CHECK(p.activation_set == std::vector<Index>{0});
}

TEST_CASE("self-probe activates every gallery item") {
  std::mt19937_64 rng(2);
  const auto gallery = l2_normalise(testing::random_matrix(rng, 12, 5, "g"));
  const auto p = build_probe(gallery, gallery, config(Method::dis));
  std::vector<Index> all(12);
  std::iota(all.begin(), all.end(), Index{0});
  CHECK(p.activation_set == all);
}

TEST_CASE("activation set is a union, matching brute force") {
  const auto gallery = testing::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}, {-1, 0, 0}}, "g");
  const auto bank = testing::matrix({{1, 1, 1.1f}, {1.1f, 1, 1}}, "b");
  const auto p = build_probe(bank, gallery, config(Method::dis));
  CHECK(p.activation_set == std::vector<Index>{3});
  const auto brute = oracle::activation_set(oracle::probe(testing::to_oracle(bank), testing::to_oracle(gallery)), 1);
  CHECK(as_set(p.activation_set) == brute);
  CHECK(p.activation_set.size() <= bank.rows() * p.k_activation);
}

TEST_CASE("build_probe errors") {
  const auto gallery = testing::matrix({{1, 0}, {0, 1}}, "g");
  CHECK_THROWS_AS(build_probe(testing::matrix({{1, 0, 0}}), gallery, config(Method::dis)), ShapeError);
  CHECK_THROWS_AS(build_probe(testing::matrix({{0, 0}}), gallery, config(Method::dis)), ZeroVectorError);
  CHECK_THROWS_AS(build_probe(testing::matrix({{1, 0}}), gallery, config(Method::dis, 20.0, 3)), ArgumentError);
  CHECK_THROWS_AS(build_probe(testing::matrix({{1, 0}}), gallery, config(Method::csls, 20.0, 1, 2)), ArgumentError);
}

TEST_CASE("probe storage follows the method") {
  const auto bank = testing::matrix({{1, 0}, {0.5f, 0.5f}}, "b");
  const auto gallery = testing::matrix({{1, 0}, {0, 1}}, "g");
  CHECK(build_probe(bank, gallery, config(Method::gc, 20, 1, 1)).has_probe());
  CHECK_FALSE(build_probe(bank, gallery, config(Method::is)).has_probe());
  CHECK_FALSE(build_probe(bank, gallery, config(Method::dis)).has_probe());
  CHECK(build_probe(bank, gallery, config(Method::dis), ProbeStorage::full).has_probe());
  CHECK_FALSE(build_probe(bank, gallery, config(Method::gc, 20, 1, 1), ProbeStorage::accelerators_only).has_probe());
}

TEST_CASE("GC worked examples") {
  const auto p = probe_from_matrix(rows({{0.9, 0.5, 0.6}}), config(Method::gc, 20, 1, 1));
  CHECK(normalise_gc(vec({0.7}), p)[0] == doctest::Approx(-0.3).epsilon(1e-15));
  CHECK(normalise_gc(vec({0.95}), p)[0] == 0.95);

  const auto tie = probe_from_matrix(rows({{0.5}}), config(Method::gc, 20, 1, 1));
  CHECK(normalise_gc(vec({0.5}), tie)[0] == 0.5);

  CHECK_THROWS_AS(normalise_gc(vec({0.1, 0.2}), p), ShapeError);
  const auto slim = probe_from_matrix(rows({{0.9, 0.5}}), config(Method::is), ProbeStorage::accelerators_only);
  CHECK_THROWS_AS(normalise_gc(vec({0.1}), slim), ArgumentError);
}

TEST_CASE("GC binary-search rank matches a linear scan, ties included") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> grid(-4, 4);
  for (int t = 0; t < 1000; ++t) {
    const int n = 1 + t % 12;
    RowMatrixXd row(1, n);
    for (int i = 0; i < n; ++i) row(0, i) = grid(rng) * 0.25;
    // half the probes reuse an existing entry to force ties
    const double x = (t % 2 == 0) ? row(0, static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n)))
                                  : grid(rng) * 0.25 + 0.125;
    const auto p = probe_from_matrix(row, config(Method::gc, 20, 1, 1));
    const double eta = normalise_gc(vec({x}), p)[0];
    const oracle::Vec r(row.data(), row.data() + n);
    REQUIRE(eta == -(static_cast<double>(oracle::rank_strict(x, r)) - x));
  }
}

TEST_CASE("CSLS worked examples") {
  const auto p = probe_from_matrix(rows({{0.9}, {0.2}}), config(Method::csls, 20, 1, 1));
  CHECK(p.csls_topk_mean[0] == 0.9);
  CHECK(p.csls_topk_mean[1] == 0.2);
  const auto eta = normalise_csls(vec({0.8, 0.4}), p);
  CHECK(eta[0] == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(eta[1] == doctest::Approx(-0.2).epsilon(1e-12));

  const auto single = probe_from_matrix(rows({{0.5}}), config(Method::csls, 20, 1, 1));
  CHECK(normalise_csls(vec({0.5}), single)[0] == 0.0);
}

TEST_CASE("CSLS K out of range") {
  const auto p = probe_from_matrix(rows({{0.9, 0.1}, {0.2, 0.3}}), config(Method::dis, 20, 1, 3));
  CHECK(p.csls_topk_mean.size() == 0);
  CHECK_THROWS_AS(normalise_csls(vec({0.8, 0.4}), p), ArgumentError);
}

TEST_CASE("CSLS means match a full-sort oracle") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1, 1);
  RowMatrixXd probe(15, 9);
  for (Eigen::Index i = 0; i < probe.size(); ++i) probe.data()[i] = u(rng);
  const auto p = probe_from_matrix(probe, config(Method::csls, 20, 1, 4));
  for (Eigen::Index j = 0; j < probe.rows(); ++j) {
    const oracle::Vec row(probe.row(j).data(), probe.row(j).data() + probe.cols());
    CHECK(p.csls_topk_mean[j] == doctest::Approx(oracle::mean_top(row, 4)).epsilon(1e-14));
  }
}

TEST_CASE("IS worked example demotes the hub") {
  const auto p = probe_from_matrix(rows({{1.0}, {0.0}}), config(Method::is, 1.0));
  CHECK(p.is_denominators[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(p.is_denominators[1] == 1.0);
  const auto eta = normalise_is(vec({1.0, 0.5}), p);
  CHECK(eta[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(eta[1] == doctest::Approx(1.64872).epsilon(1e-5));
  CHECK(argsort_desc(eta).order == std::vector<Index>{1, 0});
  CHECK(argsort_desc(vec({1.0, 0.5})).order == std::vector<Index>{0, 1});
}

TEST_CASE("IS tends to 1/N as beta goes to zero") {
  const auto p = probe_from_matrix(rows({{0.3, -0.2, 0.9, 0.1}, {0.5, 0.5, 0.5, 0.5}}), config(Method::is, 1e-12));
  const auto eta = normalise_is(vec({0.8, -0.4}), p);
  CHECK(eta[0] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(eta[1] == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("IS direct and log-space paths agree") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 50; ++t) {
    RowMatrixXd probe(10, 6);
    for (Eigen::Index i = 0; i < probe.size(); ++i) probe.data()[i] = u(rng);
    Eigen::VectorXd s(10);
    for (Eigen::Index j = 0; j < 10; ++j) s[j] = u(rng);
    auto p = probe_from_matrix(probe, config(Method::is, 3.0));
    REQUIRE_FALSE(p.log_space);
    const auto direct = normalise_is(s, p);
    p.log_space = true;
    const auto logged = normalise_is(s, p);
    for (Eigen::Index j = 0; j < 10; ++j) CHECK(std::abs(direct[j] - logged[j]) <= 1e-9);
  }
}

TEST_CASE("IS maps identical inputs to identical outputs at every position") {
  for (Eigen::Index g = 1; g <= 19; ++g) {
    RowMatrixXd probe(g, 4);
    probe.rowwise() = Eigen::RowVector4d(0.3, -0.2, 0.9, 0.1);
    const auto p = probe_from_matrix(probe, config(Method::is, 1.0));
    const Eigen::VectorXd s = Eigen::VectorXd::Constant(g, 0.4);
    const auto eta = normalise_is(s, p);
    REQUIRE((eta.array() == eta[0]).all());
  }
}

TEST_CASE("IS stays finite when beta * similarity exceeds the threshold") {
  const auto p = probe_from_matrix(rows({{1.0, 0.99}, {0.2, 0.1}}), config(Method::is, 1000.0));
  CHECK(p.log_space);
  CHECK(std::isfinite(p.is_log_denominators[0]));
  const auto eta = normalise_is(vec({0.995, 0.3}), p);
  CHECK(eta.allFinite());
  // log form by hand: exp(995 - (1000 + log(1 + e^-10)))
  CHECK(eta[0] == doctest::Approx(std::exp(-5.0 - std::log1p(std::exp(-10.0)))).epsilon(1e-12));
}

TEST_CASE("DIS branches") {
  const auto p = probe_from_matrix(rows({{1.0}, {0.0}}), config(Method::dis, 1.0));
  REQUIRE(p.activation_set == std::vector<Index>{0});

  SUBCASE("argmax in the activation set takes the IS branch") {
    const auto eta = normalise_dis(vec({1.0, 0.5}), p);
    CHECK(eta[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(eta[1] == doctest::Approx(1.64872).epsilon(1e-5));
  }
  SUBCASE("argmax outside the set returns s unchanged") {
    const auto s = vec({0.2, 0.7});
    const auto eta = normalise_dis(s, p);
    CHECK(std::memcmp(eta.data(), s.data(), sizeof(double) * 2) == 0);
  }
  SUBCASE("empty activation set is the identity") {
    auto empty = p;
    empty.activation_set.clear();
    finalise_probe(empty);
    const auto s = vec({1.0, 0.5});
    const auto eta = normalise_dis(s, empty);
    CHECK(std::memcmp(eta.data(), s.data(), sizeof(double) * 2) == 0);
  }
  SUBCASE("ties at the argmax use the lowest index") {
    // index 0 not active, index 1 active; equal maxima resolve to 0 -> identity
    auto q = p;
    q.activation_set = {1};
    finalise_probe(q);
    const auto s = vec({0.6, 0.6});
    CHECK(normalise_dis(s, q) == s);
  }
}

TEST_CASE("DIS equals IS when every gallery item is active") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1, 1);
  RowMatrixXd probe(8, 5);
  for (Eigen::Index i = 0; i < probe.size(); ++i) probe.data()[i] = u(rng);
  const auto p = probe_from_matrix(probe, config(Method::dis, 20.0, 8));
  REQUIRE(p.activation_set.size() == 8);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd s(8);
    for (Eigen::Index j = 0; j < 8; ++j) s[j] = u(rng);
    const auto a = normalise_dis(s, p);
    const auto b = normalise_is(s, p);
    REQUIRE(std::memcmp(a.data(), b.data(), sizeof(double) * 8) == 0);
  }
}

TEST_CASE("constant probe rows preserve the ranking for GC, CSLS and IS") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 100; ++t) {
    RowMatrixXd probe(12, 7);
    Eigen::RowVectorXd shared(7);
    for (Eigen::Index i = 0; i < 7; ++i) shared[i] = u(rng);
    probe.rowwise() = shared;
    Eigen::VectorXd s(12);
    for (Eigen::Index j = 0; j < 12; ++j) s[j] = u(rng);
    const auto base = argsort_desc(s).order;
    const auto p = probe_from_matrix(probe, config(Method::gc, 5.0, 1, 3));
    CHECK(argsort_desc(normalise_gc(s, p)).order == base);
    CHECK(argsort_desc(normalise_csls(s, p)).order == base);
    CHECK(argsort_desc(normalise_is(s, p)).order == base);
  }
}

TEST_CASE("normaliser outputs match the naive oracle on random instances") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t d = 1 + seed % 8;
    const std::size_t g = 2 + seed % 19;
    const std::size_t n = 1 + (seed * 7) % 20;
    const auto gallery = testing::random_matrix(rng, g, d, "g");
    const auto bank = testing::random_matrix(rng, n, d, "b");
    const auto query = testing::random_matrix(rng, 1, d, "q");
    const std::size_t big_k = 1 + seed % std::min(n, g);
    const std::size_t k = 1 + seed % 3 % g;
    const double beta = 0.5 + static_cast<double>(seed % 30);
    const auto p = build_probe(bank, gallery, config(Method::gc, beta, k, big_k));

    const auto og = testing::to_oracle(gallery);
    const auto P = oracle::probe(testing::to_oracle(bank), og);
    const auto s = sim_vector(query.row(0).transpose(), gallery);
    oracle::Vec os(g);
    for (std::size_t j = 0; j < g; ++j) os[j] = oracle::cosine(testing::to_oracle(query)[0], og[j]);
    for (std::size_t j = 0; j < g; ++j) REQUIRE(std::abs(os[j] - s[static_cast<Eigen::Index>(j)]) <= 1e-12);

    const auto A = oracle::activation_set(P, k);
    REQUIRE(as_set(p.activation_set) == A);
    auto close = [](const Eigen::VectorXd& a, const oracle::Vec& b, double rel) {
      for (std::size_t j = 0; j < b.size(); ++j) {
        const double scale = std::max(1.0, std::abs(b[j]));
        if (std::abs(a[static_cast<Eigen::Index>(j)] - b[j]) > rel * scale) return false;
      }
      return true;
    };
    CHECK(close(normalise_gc(s, p), oracle::gc(os, P), 1e-9));
    CHECK(close(normalise_csls(s, p), oracle::csls(os, P, big_k), 1e-9));
    CHECK(close(normalise_is(s, p), oracle::inverted_softmax(os, P, beta), 1e-9));
    CHECK(close(normalise_dis(s, p), oracle::dynamic_inverted_softmax(os, P, beta, A), 1e-9));
  }
}

TEST_CASE("probe build is independent of querybank order") {
  std::mt19937_64 rng(47);
  const auto gallery = testing::random_matrix(rng, 15, 6, "g");
  const auto bank = testing::random_matrix(rng, 11, 6, "b");
  const auto query = testing::random_matrix(rng, 4, 6, "q");
  std::vector<Index> perm(bank.rows());
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto shuffled = bank.select_rows(perm);

  const auto cfg = config(Method::gc, 7.0, 2, 3);
  const auto a = build_probe(bank, gallery, cfg);
  const auto b = build_probe(shuffled, gallery, cfg);
  for (Eigen::Index j = 0; j < a.probe.rows(); ++j) {
    for (std::size_t i = 0; i < perm.size(); ++i) {
      REQUIRE(b.probe(j, static_cast<Eigen::Index>(i)) == a.probe(j, static_cast<Eigen::Index>(perm[i])));
    }
  }
  CHECK(a.activation_set == b.activation_set);
  CHECK(a.csls_topk_mean == b.csls_topk_mean);
  CHECK(((a.is_denominators - b.is_denominators).array().abs() <= 1e-12 * a.is_denominators.array()).all());
  for (Method m : {Method::gc, Method::csls, Method::is, Method::dis}) {
    for (Index q = 0; q < query.rows(); ++q) {
      const auto s = sim_vector(query.row(q).transpose(), gallery);
      const auto ea = normalise(s, a, m);
      const auto eb = normalise(s, b, m);
      CHECK(((ea - eb).array().abs() <= 1e-12 * ea.array().abs().max(1.0)).all());
      CHECK(argsort_desc(ea).order == argsort_desc(eb).order);
    }
  }
}

TEST_CASE("rank_with_qbnorm: method none is plain cosine retrieval") {
  std::mt19937_64 rng(53);
  const auto gallery = testing::random_matrix(rng, 20, 5, "g");
  const auto bank = testing::random_matrix(rng, 9, 5, "b");
  const auto queries = testing::random_matrix(rng, 6, 5, "q");
  const auto ranked = rank_with_qbnorm(queries, gallery, bank, config(Method::none));
  REQUIRE(ranked.size() == 6);
  for (Index q = 0; q < 6; ++q) {
    const auto s = sim_vector(queries.row(q).transpose(), gallery);
    CHECK(ranked[q].order == argsort_desc(s).order);
    CHECK(ranked[q].scores == s);
  }
}

TEST_CASE("rank_with_qbnorm: DIS demotes the probed hub") {
  const auto gallery = testing::matrix({{1, 0, 0}, {0, 1, 0}}, "g");
  const auto bank = testing::matrix({{1, 0, 0}}, "b");
  const auto query = testing::matrix({{1, 0.9f, 0}}, "q");
  const auto cfg = config(Method::dis, 1.0, 1, 1);
  const auto plain = rank_with_qbnorm(query, gallery, bank, config(Method::none));
  const auto ranked = rank_with_qbnorm(query, gallery, bank, cfg);
  CHECK(plain[0].order == std::vector<Index>{0, 1});
  CHECK(ranked[0].order == std::vector<Index>{1, 0});

  const auto P = oracle::probe(testing::to_oracle(bank), testing::to_oracle(gallery));
  const oracle::Vec s{plain[0].scores[0], plain[0].scores[1]};
  const auto expect = oracle::dynamic_inverted_softmax(s, P, 1.0, oracle::activation_set(P, 1));
  CHECK(ranked[0].scores[0] == doctest::Approx(expect[0]).epsilon(1e-12));
  CHECK(ranked[0].scores[1] == doctest::Approx(expect[1]).epsilon(1e-12));
}

TEST_CASE("rank_with_qbnorm: far-domain querybank leaves DIS rankings untouched") {
  std::mt19937_64 rng(59);
  const auto gallery = l2_normalise(testing::random_matrix(rng, 30, 8, "g"));
  const auto queries = testing::random_matrix(rng, 12, 8, "q");
  std::set<Index> hit;
  for (Index q = 0; q < queries.rows(); ++q) hit.insert(argmax(sim_vector(queries.row(q).transpose(), gallery)));
  std::vector<Index> others;
  for (Index j = 0; j < gallery.rows(); ++j)
    if (!hit.count(j)) others.push_back(j);
  const auto bank = gallery.select_rows(others);

  const auto p = build_probe(bank, gallery, config(Method::dis));
  for (Index j : p.activation_set) REQUIRE_FALSE(hit.count(j));

  const auto base = rank_with_qbnorm(queries, gallery, bank, config(Method::none));
  const auto dis = rank_with_qbnorm(queries, gallery, bank, config(Method::dis));
  for (Index q = 0; q < queries.rows(); ++q) {
    CHECK(dis[q].order == base[q].order);
    CHECK(dis[q].scores == base[q].scores);
  }
}

TEST_CASE("rank_with_qbnorm is invariant to positive rescaling of inputs") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<float> scale(0.1f, 10.0f);
  const auto gallery = testing::random_matrix(rng, 20, 6, "g");
  const auto bank = testing::random_matrix(rng, 14, 6, "b");
  const auto queries = testing::random_matrix(rng, 8, 6, "q");
  RowMatrixXf gs = gallery.data();
  RowMatrixXf qs = queries.data();
  for (Eigen::Index i = 0; i < gs.rows(); ++i) gs.row(i) *= scale(rng);
  for (Eigen::Index i = 0; i < qs.rows(); ++i) qs.row(i) *= scale(rng);
  const EmbeddingMatrix gallery2(gallery.ids(), gs);
  const EmbeddingMatrix queries2(queries.ids(), qs);
  for (Method m : {Method::none, Method::gc, Method::csls, Method::is, Method::dis}) {
    const auto cfg = config(m, 20.0, 1, 5);
    const auto a = rank_with_qbnorm(queries, gallery, bank, cfg);
    const auto b = rank_with_qbnorm(queries2, gallery2, bank, cfg);
    for (std::size_t q = 0; q < a.size(); ++q) CHECK(a[q].order == b[q].order);
  }
}

TEST_CASE("querybank subsampling") {
  std::mt19937_64 rng(67);
  const auto bank = testing::random_matrix(rng, 50, 3, "b");
  const auto a = subsample_querybank(bank, 10, 123);
  const auto b = subsample_querybank(bank, 10, 123);
  const auto c = subsample_querybank(bank, 10, 124);
  CHECK(a.rows() == 10);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK(subsample_querybank(bank, 80, 1) == bank);
  CHECK(std::is_sorted(a.ids().begin(), a.ids().end(), [](const auto& x, const auto& y) {
    return std::stoi(x.substr(1)) < std::stoi(y.substr(1));
  }));
  CHECK_THROWS_AS(subsample_querybank(bank, 0, 1), ArgumentError);

  // uniformity: each row picked about cap/n of the time
  std::vector<int> picks(50, 0);
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const auto sample = subsample_querybank(bank, 10, seed);
    for (const auto& id : sample.ids()) ++picks[std::stoi(id.substr(1))];
  }
  for (int count : picks) CHECK(std::abs(count - 400) < 80);
}

TEST_CASE("ranker rejects mismatched shapes and missing accelerators") {
  const auto gallery = testing::matrix({{1, 0}, {0, 1}}, "g");
  const auto bank = testing::matrix({{1, 0}}, "b");
  const auto p = build_probe(bank, gallery, config(Method::dis, 20, 1, 1));
  CHECK_THROWS_AS(QbNormRanker(testing::matrix({{1, 0}}), p, Method::dis), ShapeError);
  CHECK_THROWS_AS(QbNormRanker(gallery, p, Method::gc), ArgumentError);
  const QbNormRanker ok(gallery, p, Method::dis);
  CHECK_THROWS_AS(ok.rank(vec({1, 0, 0})), ShapeError);
  CHECK_THROWS_AS(ok.rank(vec({0, 0})), ZeroVectorError);
}
