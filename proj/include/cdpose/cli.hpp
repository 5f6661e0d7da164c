// Copyright 2026 The cdpose Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CDPOSE_CLI_HPP_
#define CDPOSE_CLI_HPP_

namespace cdpose
{

/// Process exit codes of the command-line tool.
enum ExitCode : int
{
  kExitOk = 0,
  kExitArgument = 2,
  kExitData = 3,
  kExitRuntime = 4,
};

/// Entry point of the `cdpose` tool. Returns the process exit code.
int run_cli(int argc, char ** argv);

}  // namespace cdpose

#endif  // CDPOSE_CLI_HPP_
