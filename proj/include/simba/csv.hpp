#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "simba/dataset.hpp"

namespace simba {

/// Raw comma-separated table: header plus string cells, with source line numbers.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines;  // 1-based line of each row

    /// Column position, or -1.
    int column(const std::string& name) const;
};

/// Reads a table; blank lines and lines starting with '#' are skipped.
/// Throws ParseError on ragged rows.
CsvTable read_csv_table(std::istream& in);
CsvTable read_csv_table(const std::filesystem::path& path);

/// Column layout of a trajectory file. Empty name lists are inferred from the
/// header: u1..um, y1..yp and optional m1..mp (or a single `mask` column).
struct CsvSchema {
    std::string time_column = "t";
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::vector<std::string> masks;
    /// Optional column splitting one file into several trajectories.
    std::string id_column = "traj";
    /// When false a file without output columns loads as p = 0 (input-only).
    bool outputs_required = true;
};

/// Parses trajectories from a CSV stream.
///
/// Empty or non-numeric output cells become missing (mask 0). Rows are
/// ordered by time. Non-numeric time/input/mask cells and duplicate
/// timestamps raise ParseError with the offending line number.
/// `default_id` names the trajectory when there is no id column.
std::vector<Trajectory> load_csv(std::istream& in, const std::string& default_id, const CsvSchema& schema = {});

/// Loads one file, or every *.csv file (sorted by name) of a directory.
std::vector<Trajectory> load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Writes t,u1..um,y1..yp rows; masked outputs are written as empty cells.
void write_csv(std::ostream& out, const Trajectory& t);
void write_csv(const std::filesystem::path& path, const Trajectory& t);

/// Manifest: plain-text `key = value` lines.
///
///   train = <file or directory>     (repeatable; also val, test)
///   x0.<trajectory id> = v1 v2 ...  (known initial state)
///
/// Relative paths resolve against the manifest's directory.
Dataset load_manifest(const std::filesystem::path& path, const CsvSchema& schema = {});

struct ManifestEntry {
    Split split;
    std::filesystem::path file;
};

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries,
                    const std::map<std::string, Vector>& known_x0 = {});

}  // namespace simba
