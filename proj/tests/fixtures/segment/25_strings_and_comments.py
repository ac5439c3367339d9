# leading comment
def describe(name):
    # inline explanation
    greeting = f"hello {name}"  # trailing
    note = """multi
line"""
    if name.startswith("#"):
        greeting = greeting + ' # not a comment'
    return greeting, note
