#include "pbart/cli/model_file.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "pbart/text.hpp"

namespace pbart {

void write_model(std::ostream& out, const PosteriorSample& s) {
  out << "pbart-model " << kModelFormatVersion << '\n';
  out << "m " << s.m << '\n';
  out << "d " << s.d << '\n';
  out << "snapshots " << s.snapshots.size() << '\n';
  out << "numcut " << s.numcut << '\n';
  out << "scaling " << (s.scaling.identity ? 1 : 0) << ' ' << text::format_double(s.scaling.lo) << ' '
      << text::format_double(s.scaling.hi) << '\n';
  for (std::size_t v = 0; v < s.grid.num_variables(); ++v) {
    out << "grid " << s.grid.count(v);
    for (double c : s.grid.cutpoints(v)) out << ' ' << text::format_double(c);
    out << '\n';
  }
  for (const auto& snap : s.snapshots) {
    out << "snapshot " << text::format_double(snap.sigma) << '\n';
    for (const auto& tree : snap.trees) {
      const auto lines = tree.to_lines();
      out << "tree " << lines.size() << '\n';
      for (const auto& l : lines) out << l << '\n';
    }
  }
  out << "end\n";
}

void save_model(const std::string& path, const PosteriorSample& sample) {
  if (sample.snapshots.empty()) throw Error("refusing to save an empty posterior sample");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_model(out, sample);
  out.close();
  if (!out) throw Error("error writing " + path);
}

namespace {

class LineSource {
 public:
  explicit LineSource(std::istream& in) : in_(in) {}

  // Next line split into tokens; truncation error at end of input.
  std::vector<std::string_view> next(const char* expecting) {
    if (!std::getline(in_, line_)) {
      throw ModelFileError(ModelFileError::Kind::Truncated,
                           std::string("model file truncated: expected ") + expecting, number_ + 1);
    }
    ++number_;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    // Every line the writer emits ends in a newline; a bare last line was cut.
    if (in_.eof() && text::trim(line_) != "end") {
      throw ModelFileError(ModelFileError::Kind::Truncated, "model file truncated mid-line", number_);
    }
    return text::split_whitespace(line_);
  }
  const std::string& line() const { return line_; }
  std::size_t number() const { return number_; }

  [[noreturn]] void syntax(const std::string& what) const {
    throw ModelFileError(ModelFileError::Kind::Syntax, what + " in '" + line_ + "'", number_);
  }
  [[noreturn]] void count(const std::string& what) const {
    throw ModelFileError(ModelFileError::Kind::Count, what, number_);
  }

  unsigned long long uint_field(const char* key) {
    auto tok = next(key);
    unsigned long long v = 0;
    if (tok.size() != 2 || tok[0] != key || !text::parse_uint(tok[1], v)) syntax(std::string("expected '") + key + " <count>'");
    return v;
  }

  double real(std::string_view token) const {
    double v = 0.0;
    if (!text::parse_double(token, v)) syntax("bad number '" + std::string(token) + "'");
    return v;
  }

 private:
  std::istream& in_;
  std::string line_;
  std::size_t number_ = 0;
};

}  // namespace

PosteriorSample read_model(std::istream& in) {
  LineSource src(in);
  PosteriorSample s;

  auto head = src.next("header");
  unsigned long long version = 0;
  if (head.size() != 2 || head[0] != "pbart-model" || !text::parse_uint(head[1], version)) {
    src.syntax("not a model file");
  }
  if (version != kModelFormatVersion) {
    throw ModelFileError(ModelFileError::Kind::Version,
                         "model format version " + std::to_string(version) + ", this build reads version " +
                             std::to_string(kModelFormatVersion),
                         1);
  }
  s.m = static_cast<std::uint32_t>(src.uint_field("m"));
  s.d = static_cast<std::uint32_t>(src.uint_field("d"));
  const auto declared = src.uint_field("snapshots");
  s.numcut = static_cast<std::uint32_t>(src.uint_field("numcut"));

  auto sc = src.next("scaling");
  if (sc.size() != 4 || sc[0] != "scaling" || (sc[1] != "0" && sc[1] != "1")) src.syntax("expected 'scaling <0|1> <lo> <hi>'");
  s.scaling.identity = sc[1] == "1";
  s.scaling.lo = src.real(sc[2]);
  s.scaling.hi = src.real(sc[3]);

  std::vector<std::vector<double>> cuts;
  for (std::uint32_t v = 0; v < s.d; ++v) {
    auto tok = src.next("grid");
    if (tok.empty()) src.syntax("expected a grid line");
    if (tok[0] != "grid") src.count("declared d=" + std::to_string(s.d) + " but found " + std::to_string(v) + " grid lines");
    unsigned long long k = 0;
    if (tok.size() < 2 || !text::parse_uint(tok[1], k)) src.syntax("expected 'grid <count> ...'");
    if (tok.size() != k + 2) src.count("grid line declares " + std::to_string(k) + " cutpoints");
    auto& list = cuts.emplace_back();
    for (std::size_t i = 2; i < tok.size(); ++i) list.push_back(src.real(tok[i]));
  }
  try {
    s.grid = CutpointGrid(std::move(cuts));
  } catch (const Error& e) {
    src.syntax(e.what());
  }

  for (;;) {
    auto tok = src.next("snapshot or end");
    if (tok.size() == 1 && tok[0] == "end") break;
    if (tok.size() == 1 && tok[0] == "tree") src.syntax("tree line without count");
    if (!tok.empty() && tok[0] == "tree") {
      src.count("snapshot holds more than m=" + std::to_string(s.m) + " trees");
    }
    if (tok.size() != 2 || tok[0] != "snapshot") src.syntax("expected 'snapshot <sigma>' or 'end'");
    if (s.snapshots.size() == declared) src.count("more snapshots than the declared " + std::to_string(declared));
    Snapshot snap;
    snap.sigma = src.real(tok[1]);
    for (std::uint32_t j = 0; j < s.m; ++j) {
      auto t = src.next("tree");
      unsigned long long lines = 0;
      if (!t.empty() && (t[0] == "snapshot" || t[0] == "end")) {
        src.count("snapshot holds " + std::to_string(j) + " trees, expected m=" + std::to_string(s.m));
      }
      if (t.size() != 2 || t[0] != "tree" || !text::parse_uint(t[1], lines) || lines == 0) {
        src.syntax("expected 'tree <lines>'");
      }
      std::vector<std::string> body;
      for (unsigned long long i = 0; i < lines; ++i) {
        src.next("tree node");
        body.push_back(src.line());
      }
      try {
        snap.trees.push_back(Tree::from_lines(body));
      } catch (const ParseError& e) {
        src.syntax(e.what());
      }
    }
    s.snapshots.push_back(std::move(snap));
  }
  if (s.snapshots.size() != declared) {
    src.count("declared " + std::to_string(declared) + " snapshots, found " + std::to_string(s.snapshots.size()));
  }
  if (std::string rest; std::getline(in, rest) && !text::trim(rest).empty()) {
    throw ModelFileError(ModelFileError::Kind::Syntax, "content after 'end'", src.number() + 1);
  }
  return s;
}

PosteriorSample load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file " + path);
  return read_model(in);
}

}  // namespace pbart
