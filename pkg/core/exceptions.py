from fastapi import status


class AppException(Exception):
    """Base application exception with message, HTTP status and CLI exit code."""
    def __init__(self, message: str, status_code: int = status.HTTP_400_BAD_REQUEST, exit_code: int = 1):
        self.message = message
        self.status_code = status_code
        self.exit_code = exit_code
        super().__init__(message)


# parse errors: exit 2

class ParseException(AppException):
    def __init__(self, message: str = "Syntax error", position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message, status.HTTP_400_BAD_REQUEST, 2)


class UnknownConnectiveException(ParseException):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Unknown connective '{name}'")


class ArityException(ParseException):
    def __init__(self, name: str, expected: int, got: int):
        super().__init__(f"Connective '{name}' takes {expected} argument(s), got {got}")


class SignatureException(ParseException):
    def __init__(self, message: str = "Malformed signature"):
        super().__init__(message)


class DuplicateNameException(SignatureException):
    def __init__(self, name: str):
        super().__init__(f"Duplicate connective name '{name}'")


class ArityMismatchException(SignatureException):
    def __init__(self, name: str, arity: int, length: int):
        super().__init__(f"Connective '{name}' has arity {arity} but an order type of length {length}")


class ZeroArityException(SignatureException):
    def __init__(self, name: str):
        super().__init__(f"Constant '{name}' has no residuals")


class SortException(ParseException):
    def __init__(self, message: str = "Sort mismatch"):
        super().__init__(message)


# classification failures: exit 3

class ClassificationException(AppException):
    def __init__(self, message: str):
        super().__init__(message, status.HTTP_422_UNPROCESSABLE_ENTITY, 3)


class NotInductiveException(ClassificationException):
    def __init__(self, message: str = "Inequality is not inductive"):
        super().__init__(message)


class NotDefiniteInductiveException(ClassificationException):
    def __init__(self, message: str = "Inequality is not definite inductive"):
        super().__init__(message)


class NotLInequalityException(ClassificationException):
    def __init__(self, message: str = "Not an L-inequality"):
        super().__init__(message)


class NotKrachtException(ClassificationException):
    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"Not a Kracht formula ({reason})" + (f": {detail}" if detail else ""))


class NotCryptoInductiveException(ClassificationException):
    def __init__(self, message: str = "Inequality is not crypto-inductive"):
        super().__init__(message)


# rule application errors: exit 1

class RuleException(AppException):
    def __init__(self, message: str):
        super().__init__(message, status.HTTP_409_CONFLICT, 1)


class RuleNotApplicableException(RuleException):
    def __init__(self, rule: str, target: str):
        super().__init__(f"Rule '{rule}' does not apply to {target}")


class NotInAckermannShapeException(RuleException):
    def __init__(self, var: str, offending: str):
        self.var = var
        self.offending = offending
        super().__init__(f"System is not in Ackermann shape for {var}: {offending}")


class NotFlippableException(RuleException):
    def __init__(self, target: str):
        super().__init__(f"Cannot flip {target}: no nominal or conominal on display")


class NotStrippableException(RuleException):
    def __init__(self, target: str):
        super().__init__(f"Cannot strip {target}")


class NotPIAException(RuleException):
    def __init__(self, target: str):
        super().__init__(f"Not a PIA term on the chosen branch: {target}")


class InternalShapeException(RuleException):
    def __init__(self, message: str):
        super().__init__(f"Unexpected intermediate shape: {message}")


# oracle limits

class PosetTooLargeException(AppException):
    def __init__(self, size: int, limit: int):
        super().__init__(f"Poset of size {size} exceeds the limit {limit}", status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, 1)


class TooManyValuationsException(AppException):
    def __init__(self, count: int, limit: int):
        super().__init__(f"{count} valuations exceed the limit {limit}", status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, 1)


class UnboundVariableException(AppException):
    def __init__(self, name: str):
        super().__init__(f"Unbound variable '{name}'", status.HTTP_400_BAD_REQUEST, 1)


class NotFoundException(AppException):
    def __init__(self, message: str = "Resource not found"):
        super().__init__(message, status.HTTP_404_NOT_FOUND, 2)
