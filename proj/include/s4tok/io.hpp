#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "s4tok/partition.hpp"
#include "s4tok/tokenizer.hpp"
#include "s4tok/types.hpp"

namespace s4tok::io {

enum class PlyFormat { Ascii, BinaryLittleEndian };

/// Reads the vertex element of a PLY file. Positions come from x/y/z;
/// nx/ny/nz and red/green/blue become attributes (byte colors scaled to
/// [0, 1]); other properties are skipped. Big-endian files are rejected.
PointCloud read_point_cloud(const std::filesystem::path& path);

/// Parses PLY content already in memory.
PointCloud parse_point_cloud(const std::string& bytes);

/// Writes float32 coordinates; attributes named nx/ny/nz are float32,
/// red/green/blue are bytes, anything else float32 under its own name.
/// Non-empty `labels` are written as an int property "label".
void write_point_cloud(const PointCloud& cloud,
                       const std::filesystem::path& path,
                       PlyFormat format = PlyFormat::BinaryLittleEndian,
                       const std::vector<Index>& labels = {});

/// Optional integer per-vertex property (e.g. ground-truth "label"),
/// empty when absent.
std::vector<Index> read_vertex_labels(const std::filesystem::path& path, const std::string& name);

// S4F1 feature matrices: "S4F1", u32 rows, u32 cols (little-endian), then
// rows×cols little-endian float32 values in row-major order.

void write_feature_matrix(const RowMatrix& matrix, const std::filesystem::path& path);
RowMatrix read_feature_matrix(const std::filesystem::path& path);
RowMatrix parse_feature_matrix(const std::string& bytes);

// Partition files: one decimal label per line.

void write_partition(const std::vector<Index>& labels, const std::filesystem::path& path);
SuperpointPartition read_partition(const std::filesystem::path& path);
SuperpointPartition parse_partition(const std::string& text);

/// Token JSON plus a sibling "<stem>.offsets.s4f" holding every patch's
/// offset rows back to back (and "<stem>.pe.s4f" for the positional
/// encoding). Patch entries record their first offset row.
void write_tokens(const TokenizerOutput& output, const std::filesystem::path& path);
TokenizerOutput read_tokens(const std::filesystem::path& path);

/// Sibling paths used by write_tokens.
std::filesystem::path offsets_path_for(const std::filesystem::path& tokens_path);
std::filesystem::path pe_path_for(const std::filesystem::path& tokens_path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

} // namespace s4tok::io
