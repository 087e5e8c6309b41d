#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "sadp/core.hpp"
#include "sadp/error.hpp"

using namespace sadp;

namespace {

std::vector<std::uint8_t> random_dense(std::mt19937_64& gen, std::size_t t, double p = 0.5) {
    std::bernoulli_distribution bit(p);
    std::vector<std::uint8_t> v(t);
    for (auto& b : v) b = bit(gen) ? 1 : 0;
    return v;
}

}  // namespace

TEST_CASE("pack_train places bits LSB first") {
    const std::vector<std::uint8_t> dense = {1, 0, 1, 0};
    const auto tr = pack_train(dense, 4);
    CHECK(tr.length() == 4);
    CHECK(tr.popcount() == 2);
    CHECK(tr[0]);
    CHECK_FALSE(tr[1]);
    CHECK(tr[2]);
    REQUIRE(tr.words().size() == 1);
    CHECK(tr.words()[0] == 0b0101);
}

TEST_CASE("pack_train of zeros") {
    const std::vector<std::uint8_t> dense = {0, 0, 0};
    CHECK(pack_train(dense, 3).popcount() == 0);
}

TEST_CASE("pack_train rejects a length mismatch") {
    const std::vector<std::uint8_t> dense = {1, 0, 1};
    CHECK_THROWS_AS(pack_train(dense, 4), ShapeError);
}

TEST_CASE("pack and unpack round trip on 1000-bit vectors") {
    std::mt19937_64 gen(11);
    for (int k = 0; k < 10000; ++k) {
        const auto v = random_dense(gen, 1000);
        REQUIRE(unpack_train(pack_train(v, 1000)) == v);
    }
}

TEST_CASE("round trip and popcount for every length up to 4096") {
    std::mt19937_64 gen(5);
    for (std::size_t t = 1; t <= 4096; ++t) {
        const auto v = random_dense(gen, t, 0.3);
        const auto tr = pack_train(v, t);
        REQUIRE(unpack_train(tr) == v);
        std::size_t ones = 0;
        for (auto b : v) ones += b;
        REQUIRE(tr.popcount() == ones);
        REQUIRE(tr.words().size() == words_for(t));
        REQUIRE((tr.words().back() & ~tail_mask(t)) == 0);
    }
}

TEST_CASE("from_words rejects set pad bits") {
    CHECK_THROWS_AS(SpikeTrain::from_words(3, {0b1000}), ShapeError);
    CHECK_THROWS_AS(SpikeTrain::from_words(65, {0}), ShapeError);
    CHECK(SpikeTrain::from_words(3, {0b101}).popcount() == 2);
}

TEST_CASE("SpikeTensor set and read") {
    SpikeTensor s(2, 3, 70);
    s.set_spike(1, 2, 69);
    s.set_spike(0, 0, 0);
    CHECK(s.spike(1, 2, 69));
    CHECK(s.spike(0, 0, 0));
    CHECK_FALSE(s.spike(1, 2, 68));
    CHECK(s.popcount(1, 2) == 1);
    CHECK(s.words_per_train() == 2);
    CHECK(s.train(1, 2)[69]);
}

TEST_CASE("SpikeTensor stack concatenates along the batch") {
    SpikeTensor a(1, 2, 5), b(2, 2, 5);
    a.set_spike(0, 1, 4);
    b.set_spike(1, 0, 2);
    const std::vector<SpikeTensor> parts = {a, b};
    const auto s = SpikeTensor::stack(parts);
    CHECK(s.batch() == 3);
    CHECK(s.spike(0, 1, 4));
    CHECK(s.spike(2, 0, 2));
    const std::vector<SpikeTensor> bad = {a, SpikeTensor(1, 3, 5)};
    CHECK_THROWS_AS(SpikeTensor::stack(bad), ShapeError);
}

TEST_CASE("spike tensor dump round trip and header layout") {
    std::mt19937_64 gen(3);
    SpikeTensor s(3, 4, 65);
    for (std::size_t b = 0; b < 3; ++b)
        for (std::size_t n = 0; n < 4; ++n) s.set_train(b, n, pack_train(random_dense(gen, 65), 65));
    std::stringstream buf;
    write_spike_tensor(buf, s);
    const std::string bytes = buf.str();
    CHECK(bytes.substr(0, 8) == "SADPSPK1");
    CHECK(static_cast<unsigned char>(bytes[8]) == 3);
    CHECK(static_cast<unsigned char>(bytes[12]) == 4);
    CHECK(static_cast<unsigned char>(bytes[16]) == 65);
    CHECK(bytes.size() == 8 + 12 + 3 * 4 * 2 * 8);
    std::stringstream in(bytes);
    CHECK(read_spike_tensor(in) == s);
}

TEST_CASE("spike tensor dump rejects corruption") {
    SpikeTensor s(1, 1, 10);
    std::stringstream buf;
    write_spike_tensor(buf, s);
    std::string bytes = buf.str();

    std::stringstream truncated(bytes.substr(0, bytes.size() - 1));
    CHECK_THROWS_AS(read_spike_tensor(truncated), ParseError);

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    std::stringstream m(bad_magic);
    CHECK_THROWS_AS(read_spike_tensor(m), ParseError);

    std::string pad = bytes;
    pad[20 + 1] = static_cast<char>(0x80);  // bit 15 of the only word, beyond T = 10
    std::stringstream p(pad);
    CHECK_THROWS(read_spike_tensor(p));
}

TEST_CASE("init_rademacher support and determinism") {
    const auto small = init_rademacher(2, 2, 7);
    for (double v : small.values()) CHECK((v == 1.0 || v == -1.0));

    const auto w = init_rademacher(784, 400, 42);
    std::size_t plus = 0;
    for (double v : w.values()) {
        REQUIRE((v == 1.0 || v == -1.0));
        plus += v > 0;
    }
    const double frac = static_cast<double>(plus) / static_cast<double>(w.values().size());
    CHECK(frac >= 0.45);
    CHECK(frac <= 0.55);
    CHECK(init_rademacher(784, 400, 42) == w);
    CHECK_FALSE(init_rademacher(784, 400, 43) == w);
}

TEST_CASE("initializers reject zero dimensions") {
    CHECK_THROWS_AS(init_rademacher(0, 3, 1), ShapeError);
    CHECK_THROWS_AS(init_rademacher(3, 0, 1), ShapeError);
    CHECK_THROWS_AS(init_uniform(0, 3, 0.0, 0.3, 1), ShapeError);
}

TEST_CASE("init_uniform range") {
    const auto w = init_uniform(50, 40, 0.0, 0.3, 9);
    for (double v : w.values()) {
        CHECK(v >= 0.0);
        CHECK(v < 0.3);
    }
}

TEST_CASE("frobenius norm") {
    WeightMatrix w(2, 2, 0.0);
    w(0, 0) = 3;
    w(1, 1) = 4;
    CHECK(w.frobenius_norm() == doctest::Approx(5.0));
    CHECK(init_rademacher(10, 10, 1).frobenius_norm() == doctest::Approx(10.0));
}
