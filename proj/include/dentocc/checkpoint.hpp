#pragma once

/**
 * OCDT tensor container.
 *
 * Layout (all integers little-endian):
 *
 *   "OCDT"                      4-byte magic
 *   u32 version                 currently 1
 *   u32 tensor_count
 *   per tensor:
 *     u32 name_length, name bytes (UTF-8)
 *     u32 rank, u64 dims[rank]
 *     f32 values[prod(dims)]    IEEE-754 binary32
 *   u32 crc32                   CRC-32 (zlib polynomial) of every preceding byte
 *
 * Values are stored at 32-bit precision; callers computing in 64-bit round
 * to nearest float on save.
 */

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dentocc/error.hpp"
#include "dentocc/tensor.hpp"

namespace dentocc {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public Error {
public:
    using Error::Error;
};
class CrcError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};
class VersionError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};
class TruncatedError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};
class FormatError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

struct StoredTensor {
    std::string name;
    Shape shape;
    std::vector<float> values;

    StoredTensor() = default;
    StoredTensor(std::string n, Shape s, std::vector<float> v);
    /// Rounds 64-bit values to binary32.
    static StoredTensor from_doubles(std::string n, Shape s, std::span<const double> v);
    std::vector<double> to_doubles() const;
};

class TensorArchive {
public:
    void add(StoredTensor t);
    void add(std::string name, Shape shape, std::span<const double> values);

    const std::vector<StoredTensor>& tensors() const { return tensors_; }
    bool contains(const std::string& name) const;
    const StoredTensor& at(const std::string& name) const;

    std::vector<std::uint8_t> serialize() const;
    static TensorArchive deserialize(std::span<const std::uint8_t> bytes);

    /// Writes via a temporary sibling and rename, so readers never see a partial file.
    void save(const std::filesystem::path& path) const;
    static TensorArchive load(const std::filesystem::path& path);

private:
    std::vector<StoredTensor> tensors_;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

}  // namespace dentocc
