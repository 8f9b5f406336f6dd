#pragma once

#include <functional>
#include <string_view>

namespace qdforge {

using WarningSink = std::function<void(std::string_view)>;

/// Routes engine warnings; the default sink writes to std::clog.
/// Returns the previous sink.
WarningSink set_warning_sink(WarningSink sink);

void warn(std::string_view message);

}  // namespace qdforge
