import time
import warnings


class ImproperCMDArguments(Exception): pass
class BadParameters(Exception):
    def __init__(self, argument):
        Exception.__init__(self, "Unexpected value of parameter {0}".format(argument))
        self.argument = argument

class DomainError(ValueError): pass
class UnknownInstance(KeyError): pass

class InstanceError(Exception): pass

class InstanceSyntaxError(InstanceError):
    def __init__(self, msg, line=0, col=0):
        InstanceError.__init__(self, f"{msg} (line {line}, column {col})")
        self.line, self.col = line, col

class InstanceSemanticError(InstanceError):
    def __init__(self, violations):
        codes = sorted({v.code for v in violations})
        InstanceError.__init__(self, f"Instance violates {len(violations)} invariant(s): {', '.join(codes)}")
        self.violations = violations
        self.codes = codes




class FancyDict(dict):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.__dict__ = self

class Timer:
    """ Simple block which can be called as a context, to know the time of a block. """
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *args):
        self.end = time.perf_counter()
        self.interval = self.end - self.start


# Transparent, and simple argument parsing FTW!
def convert_nicely(arg, possible_types=(bool, float, int, str)):
    """ Try and see what sticks. Possible types can be changed. """
    for data_type in possible_types:
        try:

            if data_type is bool:
                if arg in ['T', 'True', 'true', 'on']: return True
                if arg in ['F', 'False', 'false', 'off']: return False
                raise ValueError
            else:
                proper_arg = data_type(arg)
                return proper_arg
        except ValueError:
            continue
    # Here, i.e. no data type really stuck
    warnings.warn(f"None of the possible datatypes matched for {arg}. Returning as-is")
    return arg
