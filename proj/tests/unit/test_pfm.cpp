#include <doctest.h>

#include <cstring>

#include "lumen/pfm.hpp"
#include "lumen/rng.hpp"

#include "testutil.hpp"

using namespace lumen;
using testutil::TempDir;

TEST_SUITE("pfm") {

TEST_CASE("writer emits the canonical header") {
    TempDir tmp;
    Image3 img(64, 128);
    std::string path = tmp.file("hdr.pfm");
    write_pfm(img, path);

    std::string bytes = testutil::slurp(path);
    const std::string header = "PF\n128 64\n-1.0\n";
    REQUIRE(bytes.size() == header.size() + 64u * 128u * 3u * 4u);
    CHECK(bytes.compare(0, header.size(), header) == 0);
}

TEST_CASE("round-trip is bit-exact, including negatives") {
    TempDir tmp;
    Image3 img(5, 3);
    Rng rng(11);
    for (auto &v : img.data) v = static_cast<float>(rng.uniform(-1e3, 1e3));
    img.at(0, 0, 0) = 0.0f;
    img.at(1, 1, 1) = -0.0f;
    img.at(2, 2, 2) = 1e-38f;

    std::string path = tmp.file("rt.pfm");
    write_pfm(img, path);
    Image3 back = read_pfm(path);
    REQUIRE(back.height == 5);
    REQUIRE(back.width == 3);
    CHECK(std::memcmp(back.data.data(), img.data.data(), img.size() * 4) == 0);
}

TEST_CASE("file rows are stored bottom-to-top") {
    TempDir tmp;
    Image3 img(2, 2);
    for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = static_cast<float>(i);
    std::string path = tmp.file("rows.pfm");
    write_pfm(img, path);

    std::string bytes = testutil::slurp(path);
    float first;
    std::memcpy(&first, bytes.data() + 12, 4);  // header "PF\n2 2\n-1.0\n" is 12 bytes
    CHECK(first == img.at(1, 0, 0));
}

TEST_CASE("grayscale Pf is recognized but rejected") {
    TempDir tmp;
    std::string path = tmp.file("gray.pfm");
    testutil::spit(path, "Pf\n2 2\n-1.0\n" + std::string(16, '\0'));
    CHECK_THROWS_AS(read_pfm(path), UnsupportedFormat);
    try {
        read_pfm(path);
    } catch (const FormatError &e) {
        CHECK(e.offset() == 0);
    }
}

TEST_CASE("malformed headers report the failing byte") {
    TempDir tmp;

    std::string magic = tmp.file("magic.pfm");
    testutil::spit(magic, "QF\n2 2\n-1.0\n");
    try {
        read_pfm(magic);
        FAIL("expected FormatError");
    } catch (const FormatError &e) {
        CHECK(e.offset() == 0);
    }

    std::string dim = tmp.file("dim.pfm");
    testutil::spit(dim, "PF\nx 2\n-1.0\n");
    try {
        read_pfm(dim);
        FAIL("expected FormatError");
    } catch (const FormatError &e) {
        CHECK(e.offset() == 3);  // the 'x'
    }

    std::string scale = tmp.file("scale.pfm");
    testutil::spit(scale, "PF\n2 2\nzz\n");
    try {
        read_pfm(scale);
        FAIL("expected FormatError");
    } catch (const FormatError &e) {
        CHECK(e.offset() == 7);  // first 'z'
    }
}

TEST_CASE("truncated payload reports the end of data") {
    TempDir tmp;
    Image3 img(2, 2);
    std::string path = tmp.file("trunc.pfm");
    write_pfm(img, path);
    std::string bytes = testutil::slurp(path);
    REQUIRE(bytes.size() == 12u + 48u);
    testutil::spit(path, bytes.substr(0, 22));
    try {
        read_pfm(path);
        FAIL("expected FormatError");
    } catch (const FormatError &e) {
        CHECK(e.offset() == 22);
    }
}

TEST_CASE("missing file and empty image are rejected") {
    TempDir tmp;
    CHECK_THROWS_AS(read_pfm(tmp.file("absent.pfm")), FormatError);
    CHECK_THROWS_AS(write_pfm(Image3(), tmp.file("empty.pfm")), std::invalid_argument);
}

}  // TEST_SUITE
