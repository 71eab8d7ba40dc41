from reprompt.providers.profiles import ChatTurn, GenerationRequest, ProviderProfile, ROLES
from reprompt.providers.mock import MockProviders, VOCABULARY, planted_image, planted_words
from reprompt.providers.http import HttpProviders

__all__ = [
    "ChatTurn",
    "GenerationRequest",
    "ProviderProfile",
    "ROLES",
    "MockProviders",
    "HttpProviders",
    "VOCABULARY",
    "planted_image",
    "planted_words",
]
