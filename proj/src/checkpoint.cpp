#include "dentocc/checkpoint.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_set>

namespace dentocc {

static_assert(std::endian::native == std::endian::little, "OCDT I/O assumes a little-endian host");

StoredTensor::StoredTensor(std::string n, Shape s, std::vector<float> v)
    : name(std::move(n)), shape(std::move(s)), values(std::move(v)) {
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("stored tensor '" + name + "' of shape " + shape_str(shape) + " given " +
                             std::to_string(values.size()) + " values");
    }
}

StoredTensor StoredTensor::from_doubles(std::string n, Shape s, std::span<const double> v) {
    std::vector<float> f(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) f[i] = static_cast<float>(v[i]);
    return StoredTensor(std::move(n), std::move(s), std::move(f));
}

std::vector<double> StoredTensor::to_doubles() const { return {values.begin(), values.end()}; }

void TensorArchive::add(StoredTensor t) {
    if (t.name.empty()) throw FormatError("tensor names must be non-empty");
    if (contains(t.name)) throw FormatError("duplicate tensor name '" + t.name + "'");
    tensors_.push_back(std::move(t));
}

void TensorArchive::add(std::string name, Shape shape, std::span<const double> values) {
    add(StoredTensor::from_doubles(std::move(name), std::move(shape), values));
}

bool TensorArchive::contains(const std::string& name) const {
    for (const auto& t : tensors_) {
        if (t.name == name) return true;
    }
    return false;
}

const StoredTensor& TensorArchive::at(const std::string& name) const {
    for (const auto& t : tensors_) {
        if (t.name == name) return t;
    }
    throw FormatError("archive has no tensor named '" + name + "'");
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in bounded chunks.
    constexpr std::size_t kChunk = 1u << 30;
    for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
        const auto len = static_cast<uInt>(std::min(kChunk, bytes.size() - off));
        crc = crc32(crc, bytes.data() + off, len);
    }
    return static_cast<std::uint32_t>(crc);
}

namespace {

template <class T>
void put(std::vector<std::uint8_t>& out, T value) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <class T>
    T get() {
        need(sizeof(T));
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    void read(void* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (remaining() < n) throw TruncatedError("checkpoint truncated at byte " + std::to_string(pos_));
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> TensorArchive::serialize() const {
    std::vector<std::uint8_t> out{'O', 'C', 'D', 'T'};
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors_.size()));
    for (const auto& t : tensors_) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
        for (auto d : t.shape) put<std::uint64_t>(out, d);
        const auto* raw = reinterpret_cast<const std::uint8_t*>(t.values.data());
        out.insert(out.end(), raw, raw + t.values.size() * sizeof(float));
    }
    put<std::uint32_t>(out, crc32_of(out));
    return out;
}

TensorArchive TensorArchive::deserialize(std::span<const std::uint8_t> bytes) {
    Reader in(bytes);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "OCDT", 4) != 0) throw FormatError("bad magic: not an OCDT file");
    const auto version = in.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw VersionError("unsupported OCDT version " + std::to_string(version) + " (expected " +
                           std::to_string(kCheckpointVersion) + ")");
    }
    const auto count = in.get<std::uint32_t>();
    TensorArchive archive;
    std::unordered_set<std::string> names;
    std::vector<StoredTensor> parsed;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = in.get<std::uint32_t>();
        if (name_len > in.remaining()) throw TruncatedError("checkpoint truncated inside tensor name");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto rank = in.get<std::uint32_t>();
        if (static_cast<std::uint64_t>(rank) * 8 > in.remaining()) throw TruncatedError("checkpoint truncated inside dims");
        Shape shape(rank);
        std::uint64_t numel = 1;
        for (auto& d : shape) {
            const auto v = in.get<std::uint64_t>();
            if (v == 0) throw FormatError("tensor '" + name + "' has a zero extent");
            d = static_cast<std::size_t>(v);
            if (numel > in.remaining() / v) throw TruncatedError("checkpoint truncated inside tensor '" + name + "'");
            numel *= v;
        }
        if (numel * sizeof(float) > in.remaining()) throw TruncatedError("checkpoint truncated inside tensor '" + name + "'");
        std::vector<float> values(numel);
        in.read(values.data(), numel * sizeof(float));
        if (!names.insert(name).second) throw FormatError("duplicate tensor name '" + name + "'");
        parsed.emplace_back(std::move(name), std::move(shape), std::move(values));
    }
    const std::size_t body = in.position();
    const auto stored_crc = in.get<std::uint32_t>();
    if (in.remaining() != 0) throw FormatError("trailing bytes after checkpoint CRC");
    if (crc32_of(bytes.first(body)) != stored_crc) throw CrcError("checkpoint CRC mismatch");
    for (auto& t : parsed) archive.tensors_.push_back(std::move(t));
    return archive;
}

void TensorArchive::save(const std::filesystem::path& path) const {
    const auto bytes = serialize();
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

TensorArchive TensorArchive::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace dentocc
