#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "dcrf/rng.hpp"
#include "dcrf/softmax.hpp"

using namespace dcrf;

TEST_CASE("zero scores give the uniform distribution") {
  ScoreField s(2, 2, 3);
  MarginalField q = softmax_normalize(s);
  for (int i = 0; i < q.pixels(); ++i)
    for (int l = 0; l < 3; ++l) CHECK(q.pixel(i)[l] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("constant shift leaves the distribution unchanged") {
  Rng rng(1);
  ScoreField a(3, 3, 4), b(3, 3, 4);
  for (int i = 0; i < a.pixels(); ++i) {
    const double shift = rng.uniform(-30.0, 30.0);
    for (int l = 0; l < 4; ++l) {
      a.pixel(i)[l] = rng.uniform(-5.0, 5.0);
      b.pixel(i)[l] = a.pixel(i)[l] + shift;
    }
  }
  MarginalField qa = softmax_normalize(a), qb = softmax_normalize(b);
  for (std::size_t i = 0; i < qa.values.size(); ++i) CHECK(qa.values[i] == doctest::Approx(qb.values[i]).epsilon(1e-12));
}

TEST_CASE("hand-evaluated three-label case") {
  ScoreField s(1, 1, 3);
  s.at(0, 0, 0) = std::log(2.0);
  MarginalField q = softmax_normalize(s);
  CHECK(q.at(0, 0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(q.at(0, 0, 1) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(q.at(0, 0, 2) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("rows sum to one and survive large scores") {
  ScoreField s(2, 2, 3);
  s.at(0, 0, 0) = 1e4;
  s.at(1, 1, 2) = -1e4;
  s.at(0, 1, 1) = 9999.0;
  MarginalField q = softmax_normalize(s);
  for (int i = 0; i < q.pixels(); ++i) {
    double sum = 0.0;
    for (int l = 0; l < 3; ++l) {
      CHECK(std::isfinite(q.pixel(i)[l]));
      sum += q.pixel(i)[l];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("non-finite scores are rejected with the pixel named") {
  ScoreField s(2, 3, 2);
  s.at(1, 2, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(softmax_normalize(s), doctest::Contains("(2,1)"), std::invalid_argument);
}

TEST_CASE("argmax picks the largest and breaks ties low") {
  MarginalField q(1, 3, 3);
  q.at(0, 0, 0) = 0.2; q.at(0, 0, 1) = 0.7; q.at(0, 0, 2) = 0.1;
  q.at(0, 1, 0) = 0.5; q.at(0, 1, 1) = 0.5; q.at(0, 1, 2) = 0.0;
  q.at(0, 2, 2) = 1.0;
  LabelMap m = argmax_labeling(q);
  CHECK(m.at(0, 0) == 1);
  CHECK(m.at(0, 1) == 0);
  CHECK(m.at(0, 2) == 2);
}
