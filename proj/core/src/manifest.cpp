#include "fewshot/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fewshot/common.hpp"
#include "fewshot/png_io.hpp"

namespace fewshot {

namespace {

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(strip(field));
  return fields;
}

}  // namespace

Dataset load_manifest(const std::string& manifest_path,
                      const LoadOptions& options) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest: " + manifest_path);

  const std::filesystem::path base =
      std::filesystem::path(manifest_path).parent_path();

  Dataset dataset;
  dataset.name = options.name.empty()
                     ? std::filesystem::path(manifest_path).stem().string()
                     : options.name;
  dataset.image_shape = {options.target_height, options.target_width,
                         options.channels};

  std::string line;
  if (!std::getline(in, line) ||
      split_csv_row(line) != std::vector<std::string>{"path", "label", "split"})
    throw DataError("manifest " + manifest_path +
                    ": missing 'path,label,split' header row");

  std::set<std::string> seen_ids;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (strip(line).empty()) continue;
    const auto fields = split_csv_row(line);
    const std::string where =
        manifest_path + " row " + std::to_string(row);
    if (fields.size() != 3)
      throw DataError(where + ": expected 3 fields, found " +
                      std::to_string(fields.size()));

    Sample sample;
    sample.id = fields[0];
    sample.source = dataset.name;
    try {
      std::size_t pos = 0;
      sample.label = std::stoi(fields[1], &pos);
      if (pos != fields[1].size() || sample.label < 0) throw std::exception();
    } catch (...) {
      throw DataError(where + ": label '" + fields[1] +
                      "' is not a non-negative integer");
    }
    if (fields[2] == "train")
      sample.split = Split::kTrain;
    else if (fields[2] == "test")
      sample.split = Split::kTest;
    else
      throw DataError(where + ": split '" + fields[2] +
                      "' is not one of {train,test}");
    if (!seen_ids.insert(sample.id).second)
      throw DataError(where + ": duplicate sample path '" + sample.id + "'");

    const std::filesystem::path image_path = base / fields[0];
    Image decoded;
    try {
      decoded = read_png(image_path.string());
    } catch (const std::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    sample.image = preprocess(convert_channels(decoded, options.channels),
                              options.target_height, options.target_width);
    dataset.classes.insert(sample.label);
    dataset.samples.push_back(std::move(sample));
  }

  if (dataset.samples.empty())
    throw DataError("empty dataset: manifest " + manifest_path +
                    " contains no rows");
  return dataset;
}

void write_manifest(const std::string& manifest_path,
                    const std::vector<std::string>& paths,
                    const std::vector<int>& labels,
                    const std::vector<Split>& splits) {
  if (paths.size() != labels.size() || paths.size() != splits.size())
    throw ConfigError("write_manifest: mismatched column lengths");
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot write manifest: " + manifest_path);
  out << "path,label,split\n";
  for (std::size_t i = 0; i < paths.size(); ++i)
    out << paths[i] << ',' << labels[i] << ','
        << (splits[i] == Split::kTrain ? "train" : "test") << '\n';
}

}  // namespace fewshot
