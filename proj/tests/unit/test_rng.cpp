#include "doctest.h"

#include <cmath>

#include "perfsamp/rng.hpp"

using perfsamp::create_stream;

TEST_CASE("same seed and stream id reproduce the sequence") {
  auto a = create_stream(42, 0);
  auto b = create_stream(42, 0);
  for (int i = 0; i < 3; ++i) CHECK(a.next_uniform() == b.next_uniform());
}

TEST_CASE("distinct stream ids differ within 64 draws") {
  auto a = create_stream(42, 0);
  auto b = create_stream(42, 1);
  bool differs = false;
  for (int i = 0; i < 64; ++i) differs |= a.next_uniform() != b.next_uniform();
  CHECK(differs);
}

TEST_CASE("zero seed is legal") {
  auto s = create_stream(0, 0);
  const double u = s.next_uniform();
  CHECK(u > 0.0);
  CHECK(u < 1.0);
}

TEST_CASE("uniforms stay in the open interval and have mean one half") {
  auto s = create_stream(7, 3);
  double sum = 0.0;
  bool inside = true;
  for (int i = 0; i < 1'000'000; ++i) {
    const double u = s.next_uniform();
    inside &= u > 0.0 && u < 1.0;
    sum += u;
  }
  CHECK(inside);
  CHECK(std::abs(sum / 1e6 - 0.5) < 0.002);
  CHECK(s.draws() == 1'000'000);
}

TEST_CASE("draw 1000 is identical across runs") {
  auto a = create_stream(99, 5);
  auto b = create_stream(99, 5);
  double x = 0, y = 0;
  for (int i = 0; i < 1000; ++i) {
    x = a.next_uniform();
    y = b.next_uniform();
  }
  CHECK(x == y);
}

TEST_CASE("split does not advance the parent and is keyed by child") {
  auto s = create_stream(1, 2);
  auto c1 = s.split(0);
  auto c2 = s.split(1);
  auto c1_again = s.split(0);
  CHECK(s.draws() == 0);
  CHECK(c1.stream_id() == c1_again.stream_id());
  CHECK(c1.stream_id() != c2.stream_id());
  CHECK(c1.next_uniform() == c1_again.next_uniform());
}

TEST_CASE("derived stream ids separate experiments and replications") {
  CHECK(perfsamp::derive_stream_id(1, 0) != perfsamp::derive_stream_id(1, 1));
  CHECK(perfsamp::derive_stream_id(1, 0) != perfsamp::derive_stream_id(2, 0));
}
