import sys
from typing import Dict, List, Any, Optional

# Usage errors exit with the BSD sysexits EX_USAGE code
EXIT_USAGE = 64


class ArgParse:
    """
    Small command framework: commands are registered with typed argument
    specs and dispatched to a method named after the command (dashes and
    spaces become underscores).
    """

    def __init__(self):
        self.commands = {}
        self.command_args = {}
        self.global_args = []
        self.kwargs = {}
        self.current_command = None
        self.exit_code = 0
        self.usage_error: Optional[str] = None
        self.prog = 'groupmix'

    def add_cmd(self, name: str, msg: str = "", aliases: Optional[List[str]] = None):
        """Add a command"""
        if aliases is None:
            aliases = []

        self.commands[name] = {
            'name': name,
            'msg': msg,
            'aliases': aliases,
        }
        self.command_args[name] = []
        for alias in aliases:
            self.commands[alias] = self.commands[name]

    def add_args(self, args_list: List[Dict[str, Any]]):
        """Add arguments to the most recently added command"""
        primary = [name for name, info in self.commands.items() if name == info['name']]
        if not primary:
            raise ValueError("No command to add arguments to")
        self.command_args[primary[-1]] = args_list

    def add_global_args(self, args_list: List[Dict[str, Any]]):
        """Add arguments accepted by every command"""
        self.global_args = args_list

    def _cast_value(self, value: Any, value_type: type) -> Any:
        """
        Cast a value to the specified type.

        Supported types: str, int, float, bool, and custom types whose
        constructor accepts a string (e.g. CountType).

        :param value: Value to cast
        :param value_type: Target type
        """
        if value_type == bool:
            if isinstance(value, bool):
                return value
            elif isinstance(value, str):
                lowered = value.lower()
                if lowered in ('true', '1', 'yes', 'on'):
                    return True
                if lowered in ('false', '0', 'no', 'off'):
                    return False
                raise ValueError(f"Invalid boolean value '{value}'")
            return bool(value)
        elif value_type == int:
            return int(value)
        elif value_type == float:
            return float(value)
        elif value_type == str:
            return str(value)
        else:
            return value_type(value)

    @staticmethod
    def _is_bool_literal(value: str) -> bool:
        return value.lower() in ('true', 'false', '1', '0', 'yes', 'no', 'on', 'off')

    def _find_command(self, args: List[str]) -> tuple:
        """Find the matching command and return it with the number of args consumed"""
        if not args:
            return None, 0
        info = self.commands.get(args[0])
        if info is None:
            return None, 0
        return info['name'], 1

    def _get_argument_info(self, cmd_name: str, arg_name: str) -> Optional[Dict[str, Any]]:
        """Get argument information for a command; dashes and underscores are interchangeable"""
        key = arg_name.replace('-', '_')
        for arg_spec in self.command_args.get(cmd_name, []) + self.global_args:
            if arg_spec['name'] == key:
                return arg_spec
            if key in [a.replace('-', '_') for a in arg_spec.get('aliases', [])]:
                return arg_spec
        return None

    def _print_param_error(self, error_msg: str, cmd_name: str):
        """Print parameter error with usage to stderr and exit"""
        self.usage_error = error_msg
        print(f"Error: {error_msg}", file=sys.stderr)
        print(file=sys.stderr)
        self.print_command_help(cmd_name, file=sys.stderr)
        sys.exit(EXIT_USAGE)

    def parse(self, args: List[str]) -> Dict[str, Any]:
        """Parse the argument list and dispatch the command"""
        self.kwargs = {}
        self.current_command = None
        self.exit_code = 0
        self.usage_error = None

        if not args or args[0] in ['--help', '-h', 'help']:
            if len(args) > 1:
                self.print_help(args[1])
            else:
                self.print_help()
            return {}

        cmd_name, consumed = self._find_command(args)
        if cmd_name is None:
            self.usage_error = f"Unknown command '{args[0]}'"
            print(f"Error: {self.usage_error}", file=sys.stderr)
            print(file=sys.stderr)
            self.print_general_help(file=sys.stderr)
            sys.exit(EXIT_USAGE)

        self.current_command = cmd_name
        remaining_args = args[consumed:]

        if '--help' in remaining_args or '-h' in remaining_args:
            self.print_command_help(cmd_name)
            return {}

        try:
            return self._parse_command_args(cmd_name, remaining_args)
        except ValueError as e:
            self._print_param_error(str(e), cmd_name)

    def _store(self, cmd_name: str, arg_spec: Dict[str, Any], value: Any):
        try:
            self.kwargs[arg_spec['name']] = self._cast_value(value, arg_spec.get('type', str))
        except (ValueError, TypeError) as e:
            self._print_param_error(f"Argument '{arg_spec['name']}': {e}", cmd_name)

    def _parse_command_args(self, cmd_name: str, args: List[str]) -> Dict[str, Any]:
        """Parse arguments for a specific command"""
        arg_specs = self.command_args.get(cmd_name, []) + self.global_args

        # Initialize defaults
        for arg_spec in arg_specs:
            if 'default' in arg_spec:
                self.kwargs[arg_spec['name']] = arg_spec['default']

        positional_args = sorted([a for a in arg_specs if a.get('pos', False)],
                                 key=lambda x: x.get('rank', 0))

        i = 0
        pos_index = 0
        while i < len(args):
            arg = args[i]

            if arg.startswith('--'):
                if '=' in arg:
                    # --key=value format
                    key, value = arg[2:].split('=', 1)
                    arg_spec = self._get_argument_info(cmd_name, key)
                    if arg_spec is None:
                        self._print_param_error(f"Unknown argument '{key}'", cmd_name)
                    self._store(cmd_name, arg_spec, value)
                    i += 1
                    continue

                # --key value format; booleans may omit the value
                key = arg[2:]
                arg_spec = self._get_argument_info(cmd_name, key)
                if arg_spec is None:
                    self._print_param_error(f"Unknown argument '{key}'", cmd_name)
                if arg_spec.get('type') == bool:
                    if i + 1 < len(args) and self._is_bool_literal(args[i + 1]):
                        self._store(cmd_name, arg_spec, args[i + 1])
                        i += 2
                    else:
                        self.kwargs[arg_spec['name']] = True
                        i += 1
                    continue
                if i + 1 >= len(args):
                    self._print_param_error(f"Argument '{key}' requires a value", cmd_name)
                self._store(cmd_name, arg_spec, args[i + 1])
                i += 2
            elif arg.startswith('+') and len(arg) > 1:
                # +arg format for boolean true
                arg_spec = self._get_argument_info(cmd_name, arg[1:])
                if arg_spec is None or arg_spec.get('type') != bool:
                    self._print_param_error(f"Unknown flag '{arg}'", cmd_name)
                self.kwargs[arg_spec['name']] = True
                i += 1
            elif pos_index < len(positional_args):
                self._store(cmd_name, positional_args[pos_index], arg)
                pos_index += 1
                i += 1
            else:
                self._print_param_error(f"Unexpected argument '{arg}'", cmd_name)

        # Check required args
        for arg_spec in arg_specs:
            if arg_spec.get('required', False) and self.kwargs.get(arg_spec['name']) is None:
                self._print_param_error(f"Required argument '{arg_spec['name']}' not provided", cmd_name)

        # Validate choices
        for arg_spec in arg_specs:
            if arg_spec.get('choices') and arg_spec['name'] in self.kwargs:
                value = self.kwargs[arg_spec['name']]
                if value not in arg_spec['choices']:
                    self._print_param_error(
                        f"Argument '{arg_spec['name']}' must be one of {arg_spec['choices']}, got: {value}",
                        cmd_name)

        return self._handle_command(cmd_name)

    def _handle_command(self, cmd_name: str) -> Dict[str, Any]:
        """Handle command execution; the method's return value becomes the exit code"""
        method_name = cmd_name.replace(' ', '_').replace('-', '_')
        if hasattr(self, method_name):
            result = getattr(self, method_name)()
            self.exit_code = int(result or 0)
        return self.kwargs

    def print_help(self, target: str = "", file=None):
        """Print help information"""
        if target:
            if target in self.commands:
                self.print_command_help(target, file=file)
            else:
                print(f"No help available for '{target}'", file=file)
        else:
            self.print_general_help(file=file)

    def print_general_help(self, file=None):
        """Print general help showing all available commands"""
        print(f"Usage: {self.prog} [command] [options]", file=file)
        print(file=file)
        print("Available commands:", file=file)
        for cmd_name, cmd in self.commands.items():
            if cmd_name != cmd['name']:
                continue
            aliases_str = f" (aliases: {', '.join(cmd['aliases'])})" if cmd['aliases'] else ""
            print(f"  {cmd_name:<17} {cmd.get('msg', '')}{aliases_str}", file=file)
        print(file=file)
        print(f"Use '{self.prog} help [command]' or '{self.prog} [command] --help' for more information", file=file)

    def print_command_help(self, cmd_name: str, file=None):
        """Print help for a specific command"""
        if cmd_name not in self.commands:
            print(f"Command '{cmd_name}' not found", file=file)
            return

        cmd = self.commands[cmd_name]
        cmd_name = cmd['name']
        print(f"Command: {cmd_name}", file=file)
        if cmd.get('msg'):
            print(f"Description: {cmd['msg']}", file=file)
        if cmd['aliases']:
            print(f"Aliases: {', '.join(cmd['aliases'])}", file=file)
        print(file=file)

        args = self.command_args.get(cmd_name, []) + self.global_args
        if args:
            print("Arguments:", file=file)
            for arg in args:
                self._print_argument_help(arg, "  ", file=file)
        else:
            print("No arguments defined for this command", file=file)

    def _print_argument_help(self, arg: Dict[str, Any], indent: str = "", file=None):
        """Print help for a single argument"""
        name = arg['name']
        msg = arg.get('msg', 'No description')
        arg_type = arg.get('type', str).__name__
        default = arg.get('default')

        if arg.get('pos', False):
            arg_display = name
        else:
            arg_display = f"--{name.replace('_', '-')}"
            if arg.get('type') == bool:
                arg_display += f", +{name}"

        print(f"{indent}{arg_display}", file=file)
        print(f"{indent}  {msg}", file=file)

        details = []
        if arg.get('required', False):
            details.append("required")
        if default is not None:
            details.append(f"default: {default}")
        if arg.get('choices'):
            details.append(f"choices: {arg['choices']}")
        details.append(f"type: {arg_type}")
        print(f"{indent}  ({', '.join(details)})", file=file)

    def define_options(self):
        """Override this method to define your command structure"""
