from typing import Any, Dict, List, Optional, Type

from pydantic import BaseModel, Field, create_model

TYPE_MAP: Dict[str, Any] = {
    "string": str,
    "number": float,
    "integer": int,
    "boolean": bool,
    "number-list": List[float],
    "string-list": List[str],
}


class CommandOption(BaseModel):
    """Describes a single flag of a command."""
    type: str = Field(..., description="Key of TYPE_MAP (e.g. 'number', 'number-list').")
    description: Optional[str] = Field(None, description="Help text shown by --help.")
    enum: Optional[List[Any]] = Field(None, description="Optional list of allowed values.")
    default: Any = Field(None, description="Value used when the flag is omitted.")

    @property
    def python_type(self) -> Any:
        return TYPE_MAP.get(self.type, Any)

    @property
    def is_list(self) -> bool:
        return self.type.endswith("-list")


class CommandInputSchema(BaseModel):
    """The flags a command accepts."""
    options: Dict[str, CommandOption] = Field(..., description="Parameter name (snake_case) to its definition.")
    required: List[str] = Field(default_factory=list, description="Names of parameters that must be given.")

    def get_pydantic_model(self) -> Optional[Type[BaseModel]]:
        """
        Dynamically creates a Pydantic model from the option definitions.
        Used for validating parsed command-line parameters.
        """
        fields: Dict[str, Any] = {}
        for name, option in self.options.items():
            if name in self.required:
                fields[name] = (option.python_type, Field(..., description=option.description))
            else:
                fields[name] = (Optional[option.python_type], Field(default=option.default, description=option.description))

        if not fields:
            return None

        return create_model("DynamicCommandInputModel", **fields)  # type: ignore


class CommandDefinition(BaseModel):
    """Defines one CLI subcommand."""
    name: str = Field(..., description="Subcommand name, e.g. 'ic-study'.")
    description: str = Field(..., description="One-line help for the subcommand.")
    input_schema: CommandInputSchema


class CommandRequest(BaseModel):
    """A parsed invocation: command name plus its parameters."""
    command: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
