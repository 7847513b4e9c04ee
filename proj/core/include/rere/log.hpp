#ifndef RERE_LOG_HPP
#define RERE_LOG_HPP

#include <functional>
#include <string_view>

namespace rere::log {

using Sink = std::function<void(std::string_view)>;

// Replaces the warning sink and returns the previous one. The default sink
// writes "warning: <msg>" to stderr; pass an empty Sink to silence warnings.
Sink set_warning_sink(Sink sink);

void warn(std::string_view message);

}  // namespace rere::log

#endif  // RERE_LOG_HPP
