#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "dentocc/checkpoint.hpp"
#include "dentocc/reconstructor.hpp"
#include "support.hpp"

using namespace dentocc;
namespace fs = std::filesystem;

namespace {

TensorArchive sample_archive() {
    TensorArchive a;
    a.add(StoredTensor("w", {2, 3}, {1.5f, -2.0f, 0.0f, 3.25f, 1e-30f, -7.0f}));
    a.add(StoredTensor("b", {1}, {0.125f}));
    const double d[] = {0.1, 0.2, 0.3, 0.4};
    a.add("nested.name", {2, 1, 2}, d);
    return a;
}

void put_u32(std::vector<std::uint8_t>& bytes, std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

void refresh_crc(std::vector<std::uint8_t>& bytes) {
    const std::size_t body = bytes.size() - 4;
    put_u32(bytes, body, crc32_of(std::span(bytes).first(body)));
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("crc32 matches the zlib check value") {
    const std::string s = "123456789";
    CHECK(crc32_of(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())) == 0xCBF43926u);
}

TEST_CASE("archive round trip is bit-exact") {
    const TensorArchive a = sample_archive();
    const auto bytes = a.serialize();
    CHECK(std::memcmp(bytes.data(), "OCDT", 4) == 0);
    CHECK(bytes[4] == 1);
    CHECK(bytes[8] == 3);
    const TensorArchive b = TensorArchive::deserialize(bytes);
    REQUIRE(b.tensors().size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(b.tensors()[i].name == a.tensors()[i].name);
        CHECK(b.tensors()[i].shape == a.tensors()[i].shape);
        CHECK(std::memcmp(b.tensors()[i].values.data(), a.tensors()[i].values.data(), a.tensors()[i].values.size() * 4) == 0);
    }
    CHECK(b.serialize() == bytes);
    CHECK(b.at("nested.name").values[2] == 0.3f);

    const fs::path p = fs::temp_directory_path() / "dentocc_unit_ckpt.ocdt";
    a.save(p);
    CHECK(TensorArchive::load(p).serialize() == bytes);
    fs::remove(p);
    CHECK_THROWS_AS(TensorArchive::load(p), IoError);
}

TEST_CASE("corruption is detected and classified") {
    const auto good = sample_archive().serialize();

    // Every value byte is covered by the checksum.
    for (std::size_t at = good.size() - 20; at < good.size() - 4; ++at) {
        auto bytes = good;
        bytes[at] ^= 0x10;
        CHECK_THROWS_AS(TensorArchive::deserialize(bytes), CrcError);
    }

    auto bumped = good;
    put_u32(bumped, 4, 2);
    CHECK_THROWS_AS(TensorArchive::deserialize(bumped), VersionError);
    refresh_crc(bumped);
    CHECK_THROWS_AS(TensorArchive::deserialize(bumped), VersionError);

    for (std::size_t cut : {std::size_t{1}, std::size_t{4}, std::size_t{9}, good.size() / 2}) {
        const std::vector<std::uint8_t> truncated(good.begin(), good.end() - static_cast<std::ptrdiff_t>(cut));
        CAPTURE(cut);
        CHECK_THROWS_AS(TensorArchive::deserialize(truncated), TruncatedError);
    }

    auto magic = good;
    magic[0] = 'X';
    CHECK_THROWS_AS(TensorArchive::deserialize(magic), FormatError);

    auto extra = good;
    extra.push_back(0);
    CHECK_THROWS_AS(TensorArchive::deserialize(extra), FormatError);
}

TEST_CASE("archive contract errors") {
    TensorArchive a;
    a.add(StoredTensor("x", {2}, {1, 2}));
    CHECK_THROWS(a.add(StoredTensor("x", {1}, {1})));
    CHECK_THROWS(StoredTensor("y", {3}, {1, 2}));
    CHECK_THROWS(a.at("missing"));
    CHECK(a.contains("x"));
    CHECK_FALSE(a.contains("y"));
}

TEST_CASE("model save and load") {
    for (Conditioning mode : {Conditioning::cx, Conditioning::cbn, Conditioning::none}) {
        ReconstructorConfig cfg;
        cfg.net.conditioning = mode;
        cfg.net.hidden = 16;
        cfg.net.blocks = 2;
        ToothReconstructor model(cfg, 11);
        Rng rng(2);
        testing::randomize_parameters(model.network(), rng, 0.2);
        for (auto& b : model.buffers())
            for (auto& v : *b.values) v = rng.uniform(0.5, 1.5);

        const auto bytes = model.to_archive().serialize();
        ToothReconstructor back = ToothReconstructor::from_archive(TensorArchive::deserialize(bytes));
        CHECK(back.to_archive().serialize() == bytes);
        CHECK(back.config().net.conditioning == mode);
        CHECK(back.config().net.hidden == 16);

        // Loaded parameters are the binary32 roundings of the originals.
        auto orig = model.parameters();
        auto loaded = back.parameters();
        REQUIRE(orig.size() == loaded.size());
        for (std::size_t i = 0; i < orig.size(); ++i) {
            CHECK(orig[i].name == loaded[i].name);
            const auto a = orig[i].tensor.data();
            const auto b = loaded[i].tensor.data();
            for (std::size_t k = 0; k < a.size(); ++k) CHECK(b[k] == static_cast<double>(static_cast<float>(a[k])));
        }
    }
}

TEST_CASE("mismatched model archives are rejected") {
    ReconstructorConfig cfg;
    cfg.net.hidden = 16;
    cfg.net.blocks = 1;
    TensorArchive a = ToothReconstructor(cfg, 1).to_archive();
    TensorArchive broken;
    for (const auto& t : a.tensors())
        if (t.name != "meta.config") broken.add(t);
    CHECK_THROWS(ToothReconstructor::from_archive(broken));
}

}  // TEST_SUITE
