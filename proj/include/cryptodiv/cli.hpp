#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cryptodiv/data.hpp"

namespace cryptodiv {

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Returns 0 on success, 1 on a failed command, 2 on bad usage.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Reads a prepared dataset: `date,<features...>` with one column named
/// `target`. Every feature must be fully observed. Categories default to
/// Market unless `categories` names them.
Dataset load_dataset_csv(const std::filesystem::path& path, const std::string& target,
                         const std::map<std::string, Category>& categories = {});

} // namespace cryptodiv
