#include "lsc/render.hpp"

#include <sstream>

namespace lsc::render {

using qcb::PatchType;

std::string ascii_board(const qcb::Qcb& board) { return board.ascii(); }

namespace {

const char* fill_for(PatchType t) {
    switch (t) {
        case PatchType::Register: return "#d4a054";
        case PatchType::Route: return "#9ecbff";
        case PatchType::LocalRoute: return "#dce9f7";
        case PatchType::Extern: return "#b07bd4";
        case PatchType::IO: return "#7bd48a";
        case PatchType::Unallocated: return "#eeeeee";
    }
    return "#ffffff";
}

}  // namespace

std::string svg_board(const qcb::Qcb& board) {
    const int cell = 24;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << board.width() * cell
       << "\" height=\"" << board.height() * cell << "\">\n";
    for (int r = 0; r < board.height(); ++r)
        for (int c = 0; c < board.width(); ++c) {
            os << "  <rect x=\"" << c * cell << "\" y=\"" << r * cell << "\" width=\"" << cell
               << "\" height=\"" << cell << "\" fill=\"" << fill_for(board.at(r, c))
               << "\" stroke=\"#666\"/>\n";
        }
    for (const auto& seg : board.segments_of(PatchType::Extern)) {
        os << "  <text x=\"" << seg.col * cell + 4 << "\" y=\"" << seg.row * cell + 16
           << "\" font-size=\"10\">" << seg.extern_type << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::vector<std::string> ascii_frames(const qcb::Qcb& board,
                                      const std::vector<router::Instruction>& stream) {
    long long total = 0;
    for (const auto& i : stream) total = std::max(total, i.cycle + i.duration);
    std::vector<std::string> frames;
    for (long long t = 0; t < total; ++t) {
        std::vector<std::string> rows;
        {
            std::istringstream is(board.ascii());
            std::string line;
            while (std::getline(is, line)) rows.push_back(line);
        }
        for (const auto& i : stream) {
            if (i.duration == 0 || t < i.cycle || t >= i.cycle + i.duration) continue;
            for (const auto& p : i.patches)
                if (p.row >= 0 && p.row < static_cast<int>(rows.size()) && p.col >= 0 &&
                    p.col < static_cast<int>(rows[p.row].size()))
                    rows[p.row][p.col] = '#';
        }
        std::ostringstream os;
        os << "cycle " << t << "\n";
        for (const auto& r : rows) os << r << "\n";
        frames.push_back(os.str());
    }
    return frames;
}

}  // namespace lsc::render
